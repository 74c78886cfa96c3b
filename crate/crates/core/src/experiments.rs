//! The placement-rate and reconfiguration-overhead experiments.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::afu::{build_db_from_layouts, BitstreamDb, RoutabilityCap, Synthesizer};
use crate::error::{Error, Result};
use crate::fabric::Device;
use crate::footprint::SizeModel;
use crate::layouts::{best_effort_layout, LayoutPool, RandomLayoutOptions};
use crate::packing::{placement_rate, AmorphousIndex, Assignment, Combination, Placement, SearchMode, StandardSystem, VerdictRow, VersionPreference};
use crate::rng::{stage_rng, stream};
use crate::workloads::{build_library, sample_combinations, sample_sequence, SequenceOptions, Validator, WorkloadSpec};

/// Observed configuration-port throughput, 128 MiB/s.
pub const DEFAULT_PCAP_BANDWIDTH: f64 = 128.0 * 1024.0 * 1024.0;

/// Schema tag written as the first line of every results CSV.
pub const RESULTS_HEADER: &str = "# adpr-results v1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct OverheadModel {
    /// Bytes per second.
    pub pcap_bandwidth: f64,
    /// Joules per byte; energy is reported only when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy_per_byte: Option<f64>,
}

impl Default for OverheadModel {
    fn default() -> Self {
        OverheadModel { pcap_bandwidth: DEFAULT_PCAP_BANDWIDTH, energy_per_byte: None }
    }
}

impl OverheadModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.pcap_bandwidth > 0.0 && self.pcap_bandwidth.is_finite()) {
            return Err(Error::InvalidParameter(format!("bandwidth {} must be positive", self.pcap_bandwidth)));
        }
        if let Some(e) = self.energy_per_byte {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(Error::InvalidParameter(format!("energy per byte {e} must be non-negative")));
            }
        }
        Ok(())
    }

    pub fn seconds(&self, bytes: u64) -> f64 {
        bytes as f64 / self.pcap_bandwidth
    }
}

/// Bytes loaded moving from `prev` to `next`: every interface of `next`
/// whose AFU or footprint differs from what `prev` held there.
pub fn transition_bytes(prev: &Placement, next: &Placement) -> u64 {
    next.assignments
        .iter()
        .filter(|a| {
            prev.by_interface(a.interface())
                .is_none_or(|p| p.afu() != a.afu() || p.version.footprint != a.version.footprint)
        })
        .map(|a| a.version.bytes)
        .sum()
}

pub fn transition_time(prev: &Placement, next: &Placement, model: &OverheadModel) -> f64 {
    model.seconds(transition_bytes(prev, next))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ExperimentKind {
    Placement,
    Overhead,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExperimentKind::Placement => "placement",
            ExperimentKind::Overhead => "overhead",
        })
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "placement" => Ok(ExperimentKind::Placement),
            "overhead" => Ok(ExperimentKind::Overhead),
            _ => Err(Error::InvalidParameter(format!("unknown experiment {s:?}"))),
        }
    }
}

/// Every knob of one experiment run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ExperimentConfig {
    pub workload: WorkloadSpec,
    pub seed: u64,
    pub n_combos: usize,
    pub n_layouts: usize,
    pub routability_cap: f64,
    pub size_model: SizeModel,
    pub layouts: RandomLayoutOptions,
    pub search_mode: SearchMode,
    #[serde(default)]
    pub version_preference: VersionPreference,
    pub sequence_length: usize,
    pub afu_delta: usize,
    pub sequence: SequenceOptions,
    pub overhead: OverheadModel,
}

impl ExperimentConfig {
    pub fn new(workload: WorkloadSpec, seed: u64) -> Self {
        ExperimentConfig {
            workload,
            seed,
            n_combos: 1000,
            n_layouts: 1000,
            routability_cap: RoutabilityCap::DEFAULT.fraction(),
            size_model: SizeModel::default(),
            layouts: RandomLayoutOptions::default(),
            search_mode: SearchMode::Exact,
            version_preference: VersionPreference::default(),
            sequence_length: 1000,
            afu_delta: 1,
            sequence: SequenceOptions::default(),
            overhead: OverheadModel::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_combos == 0 {
            return Err(Error::InvalidParameter("nCombos must be positive".into()));
        }
        if self.sequence_length == 0 {
            return Err(Error::InvalidParameter("sequence length must be positive".into()));
        }
        if self.afu_delta == 0 {
            return Err(Error::InvalidParameter("afu delta must be positive".into()));
        }
        RoutabilityCap::new(self.routability_cap)?;
        self.size_model.validate()?;
        self.overhead.validate()
    }

    fn cap(&self) -> Result<RoutabilityCap> {
        RoutabilityCap::new(self.routability_cap)
    }
}

/// A device with its layout pool. The pool depends only on the device,
/// the seed and the layout options, so one testbed serves every
/// difficulty and AFU delta of a workload family.
#[derive(Debug, Clone)]
pub struct Testbed {
    pub device: Device,
    pub pool: LayoutPool,
    pub pool_id: String,
}

impl Testbed {
    pub fn new(device: Device, n_layouts: usize, seed: u64, opts: &RandomLayoutOptions) -> Result<Self> {
        let pool = LayoutPool::build(&device, n_layouts, seed, opts)?;
        Ok(Testbed::with_pool(device, pool))
    }

    pub fn with_pool(device: Device, pool: LayoutPool) -> Self {
        let pool_id = pool.id(&device);
        Testbed { device, pool, pool_id }
    }

    pub fn for_config(device: Device, cfg: &ExperimentConfig) -> Result<Self> {
        Testbed::new(device, cfg.n_layouts, cfg.seed, &cfg.layouts)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Metric {
    pub system: String,
    pub metric: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TransitionRecord {
    pub index: usize,
    pub system: String,
    pub bytes: u64,
    pub seconds: f64,
    /// Retained AFUs could not all stay put.
    pub full_repack: bool,
    /// Retained AFUs whose interface or footprint changed.
    pub relocated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExperimentResult {
    pub experiment: ExperimentKind,
    pub workload: WorkloadSpec,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub afu_delta: Option<usize>,
    pub pool_id: String,
    /// False when the overhead sequence could not be built.
    pub completed: bool,
    pub metrics: Vec<Metric>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub transitions: Vec<TransitionRecord>,
}

impl ExperimentResult {
    pub fn metric(&self, system: &str, metric: &str) -> Option<f64> {
        self.metrics
            .iter()
            .find(|m| m.system == system && m.metric == metric)
            .map(|m| m.value)
    }

    fn push(&mut self, system: &str, metric: &str, value: f64) {
        self.metrics.push(Metric { system: system.into(), metric: metric.into(), value });
    }
}

/// System names used in results.
pub mod system {
    pub const NAIVE: &str = "naive";
    pub const BEST_EFFORT: &str = "best_effort";
    pub const AMORPHOUS: &str = "amorphous";
    pub const STANDARD: &str = "standard";
    pub const RATIO: &str = "ratio";
}

/// Everything derived from a testbed for one workload: the library, the
/// combinations, a standard system per pool layout, and the version
/// database over the whole pool.
struct Prepared {
    combos: Vec<Combination>,
    standards: Vec<StandardSystem>,
    db: BitstreamDb,
}

fn prepare(bed: &Testbed, cfg: &ExperimentConfig) -> Result<Prepared> {
    cfg.validate()?;
    let library = build_library(cfg.workload);
    let n_if = bed.device.interfaces().len();
    let combos = sample_combinations(&library, cfg.n_combos, n_if, &mut stage_rng(cfg.seed, stream::COMBINATIONS))?;
    let synth = Synthesizer::new(&bed.device, cfg.cap()?, cfg.size_model);
    let standards: Vec<StandardSystem> = bed
        .pool
        .layouts()
        .par_iter()
        .map(|l| StandardSystem::new(&synth, &library, l.clone()))
        .collect();
    let db = build_db_from_layouts(&synth, bed.pool.layouts(), &library);
    Ok(Prepared { combos, standards, db })
}

/// Per-combination verdicts of the three systems, for audit dumps.
pub fn placement_verdicts(bed: &Testbed, cfg: &ExperimentConfig) -> Result<Vec<VerdictRow>> {
    let p = prepare(bed, cfg)?;
    let (best, _) = best_effort_layout(p.standards.len(), &p.combos, |l, c| p.standards[l].is_feasible(c));
    let index = AmorphousIndex::with_preference(&bed.device, &p.db, cfg.version_preference).with_mode(cfg.search_mode);
    let rows: Vec<Vec<VerdictRow>> = p
        .combos
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let timed = |system: &str, f: &dyn Fn() -> (bool, u64)| {
                let t = Instant::now();
                let (feasible, nodes) = f();
                VerdictRow {
                    combo_id: i,
                    system: system.into(),
                    feasible,
                    search_nodes: nodes,
                    elapsed_us: t.elapsed().as_micros() as u64,
                }
            };
            vec![
                timed(system::NAIVE, &|| (p.standards[LayoutPool::NAIVE].is_feasible(c), 0)),
                timed(system::BEST_EFFORT, &|| (p.standards[best].is_feasible(c), 0)),
                timed(system::AMORPHOUS, &|| {
                    let o = index.search(c, &[]);
                    (o.verdict.is_ok(), o.nodes)
                }),
            ]
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

/// Placement rates of naive standard, best-effort standard and amorphous
/// DPR on one sampled combination set.
pub fn run_placement_experiment(bed: &Testbed, cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let p = prepare(bed, cfg)?;
    let naive = &p.standards[LayoutPool::NAIVE];
    let naive_rate = placement_rate(&p.combos, |c| naive.is_feasible(c))?;
    let (best, best_rate) = best_effort_layout(p.standards.len(), &p.combos, |l, c| p.standards[l].is_feasible(c));
    let index = AmorphousIndex::with_preference(&bed.device, &p.db, cfg.version_preference).with_mode(cfg.search_mode);
    let outcomes: Vec<(bool, u64)> = p
        .combos
        .par_iter()
        .map(|c| {
            let o = index.search(c, &[]);
            (o.verdict.is_ok(), o.nodes)
        })
        .collect();
    let amorphous_rate = outcomes.iter().filter(|o| o.0).count() as f64 / p.combos.len() as f64;
    let nodes: u64 = outcomes.iter().map(|o| o.1).sum();

    let mut r = ExperimentResult {
        experiment: ExperimentKind::Placement,
        workload: cfg.workload,
        seed: cfg.seed,
        afu_delta: None,
        pool_id: bed.pool_id.clone(),
        completed: true,
        metrics: Vec::new(),
        transitions: Vec::new(),
    };
    r.push(system::NAIVE, "placement_rate", naive_rate);
    r.push(system::BEST_EFFORT, "placement_rate", best_rate);
    r.push(system::BEST_EFFORT, "layout_index", best as f64);
    r.push(system::AMORPHOUS, "placement_rate", amorphous_rate);
    r.push(system::AMORPHOUS, "db_versions", p.db.len() as f64);
    r.push(system::AMORPHOUS, "search_nodes", nodes as f64);
    Ok(r)
}

struct Walk {
    records: Vec<TransitionRecord>,
}

impl Walk {
    fn summarize(&self, r: &mut ExperimentResult, system: &str, model: &OverheadModel) {
        let mine: Vec<&TransitionRecord> = self.records.iter().filter(|t| t.system == system).collect();
        let n = mine.len().max(1) as f64;
        let mut secs: Vec<f64> = mine.iter().map(|t| t.seconds).collect();
        secs.sort_by(f64::total_cmp);
        let pct = |q: f64| if secs.is_empty() { 0.0 } else { secs[((secs.len() - 1) as f64 * q).round() as usize] };
        let mean_bytes = mine.iter().map(|t| t.bytes as f64).sum::<f64>() / n;
        r.push(system, "mean_transition_time", secs.iter().sum::<f64>() / n);
        r.push(system, "p50_transition_time", pct(0.5));
        r.push(system, "p90_transition_time", pct(0.9));
        r.push(system, "max_transition_time", pct(1.0));
        r.push(system, "mean_transition_bytes", mean_bytes);
        r.push(system, "full_repacks", mine.iter().filter(|t| t.full_repack).count() as f64);
        r.push(system, "relocated_afus", mine.iter().map(|t| t.relocated).sum::<usize>() as f64);
        if let Some(e) = model.energy_per_byte {
            r.push(system, "mean_transition_energy", e * mean_bytes);
        }
    }
}

fn relocated(prev: &Placement, next: &Placement, retained: &[usize]) -> usize {
    retained
        .iter()
        .filter(|&&s| match (prev.by_slot(s), next.by_slot(s)) {
            (Some(a), Some(b)) => a.version.footprint != b.version.footprint,
            _ => false,
        })
        .count()
}

/// Mean reconfiguration time per transition along a sequence valid under
/// both best-effort standard and amorphous DPR.
///
/// Each transition first keeps every retained AFU where it is and places
/// only the changed slots; if that fails, the whole combination is
/// repacked and every relocated AFU is billed.
pub fn run_overhead_experiment(bed: &Testbed, cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let p = prepare(bed, cfg)?;
    let library = p.db.library();
    let (best, _) = best_effort_layout(p.standards.len(), &p.combos, |l, c| p.standards[l].is_feasible(c));
    let standard = &p.standards[best];
    let index = AmorphousIndex::with_preference(&bed.device, &p.db, cfg.version_preference).with_mode(cfg.search_mode);
    let std_ok = |c: &Combination| standard.is_feasible(c);
    let am_ok = |c: &Combination| index.is_feasible(c);
    let validators: [Validator<'_>; 2] = [&std_ok, &am_ok];
    let n_if = bed.device.interfaces().len();

    let mut r = ExperimentResult {
        experiment: ExperimentKind::Overhead,
        workload: cfg.workload,
        seed: cfg.seed,
        afu_delta: Some(cfg.afu_delta),
        pool_id: bed.pool_id.clone(),
        completed: true,
        metrics: Vec::new(),
        transitions: Vec::new(),
    };
    let seq = match sample_sequence(
        library,
        cfg.sequence_length,
        cfg.afu_delta,
        n_if,
        &validators,
        &cfg.sequence,
        &mut stage_rng(cfg.seed, stream::SEQUENCE),
    ) {
        Ok(s) => s,
        Err(Error::SequenceConstruction { built, .. }) => {
            r.completed = false;
            r.push(system::STANDARD, "sequence_built", built as f64);
            return Ok(r);
        }
        Err(e) => return Err(e),
    };

    let unplaceable = |what: &str| Error::Config(format!("validated combination failed {what} placement"));
    let mut std_prev = standard.place(&seq.combos[0]).map_err(|_| unplaceable("standard"))?;
    let mut am_prev = index.place(&seq.combos[0]).map_err(|_| unplaceable("amorphous"))?;
    let mut walk = Walk { records: Vec::new() };
    for (t, pair) in seq.combos.windows(2).enumerate() {
        let (prev, next) = (&pair[0], &pair[1]);
        let retained: Vec<usize> = next
            .demanded(library)
            .filter(|&(s, a)| prev.slots()[s] == a)
            .map(|(s, _)| s)
            .collect();

        let pinned: Vec<(usize, usize)> = retained
            .iter()
            .map(|&s| (s, std_prev.by_slot(s).expect("retained slot was placed").interface()))
            .collect();
        let (std_next, std_full) = match standard.place_with(next, &pinned) {
            Ok(pl) => (pl, false),
            Err(_) => (standard.place(next).map_err(|_| unplaceable("standard"))?, true),
        };
        let kept: Vec<Assignment> = retained
            .iter()
            .map(|&s| am_prev.by_slot(s).expect("retained slot was placed").clone())
            .collect();
        let (am_next, am_full) = match index.place_with(next, &kept) {
            Ok(pl) => (pl, false),
            Err(_) => (index.place(next).map_err(|_| unplaceable("amorphous"))?, true),
        };

        for (system, before, after, full) in [
            (system::STANDARD, &std_prev, &std_next, std_full),
            (system::AMORPHOUS, &am_prev, &am_next, am_full),
        ] {
            let bytes = transition_bytes(before, after);
            walk.records.push(TransitionRecord {
                index: t,
                system: system.into(),
                bytes,
                seconds: cfg.overhead.seconds(bytes),
                full_repack: full,
                relocated: relocated(before, after, &retained),
            });
        }
        std_prev = std_next;
        am_prev = am_next;
    }

    walk.summarize(&mut r, system::STANDARD, &cfg.overhead);
    walk.summarize(&mut r, system::AMORPHOUS, &cfg.overhead);
    let s = r.metric(system::STANDARD, "mean_transition_time").unwrap_or(0.0);
    let a = r.metric(system::AMORPHOUS, "mean_transition_time").unwrap_or(0.0);
    r.push(system::RATIO, "mean_transition_time_ratio", if a > 0.0 { s / a } else { f64::NAN });
    r.push(system::BEST_EFFORT, "layout_index", best as f64);
    r.transitions = walk.records;
    Ok(r)
}

/// Writes results in long format: one row per metric.
pub fn write_results_csv<W: Write>(results: &[ExperimentResult], mut out: W) -> Result<()> {
    writeln!(out, "{RESULTS_HEADER}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["workload", "difficulty", "system", "metric", "value", "seed", "afu_delta"])?;
    for r in results {
        for m in &r.metrics {
            w.write_record([
                r.workload.family.to_string(),
                r.workload.difficulty.to_string(),
                m.system.clone(),
                m.metric.clone(),
                m.value.to_string(),
                r.seed.to_string(),
                r.afu_delta.map(|d| d.to_string()).unwrap_or_default(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ResultRow {
    pub workload: String,
    pub difficulty: String,
    pub system: String,
    pub metric: String,
    pub value: f64,
    pub seed: u64,
    pub afu_delta: Option<usize>,
}

/// Reads a results CSV written by [`write_results_csv`].
pub fn read_results_csv(text: &str) -> Result<Vec<ResultRow>> {
    let body = text
        .strip_prefix(RESULTS_HEADER)
        .ok_or_else(|| Error::Config(format!("results file does not start with {RESULTS_HEADER:?}")))?;
    let mut rdr = csv::Reader::from_reader(body.trim_start_matches(['\r', '\n']).as_bytes());
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let field = |i: usize| rec.get(i).unwrap_or_default().to_string();
        let parse_err = |what: &str| Error::Config(format!("bad {what} in results row {:?}", rec));
        rows.push(ResultRow {
            workload: field(0),
            difficulty: field(1),
            system: field(2),
            metric: field(3),
            value: field(4).parse().map_err(|_| parse_err("value"))?,
            seed: field(5).parse().map_err(|_| parse_err("seed"))?,
            afu_delta: match field(6).as_str() {
                "" => None,
                s => Some(s.parse().map_err(|_| parse_err("afu_delta"))?),
            },
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::afu::BitstreamVersion;
    use crate::bundled;
    use crate::footprint::Footprint;
    use crate::workloads::{Difficulty, WorkloadFamily};

    fn version(afu: usize, iface: usize, cells: crate::cellset::CellSet, bytes: u64) -> BitstreamVersion {
        BitstreamVersion { afu, footprint: Footprint::new(iface, cells), bytes }
    }

    #[test]
    fn transition_time_arithmetic() {
        let d = bundled::workload_bram();
        let cells = d.interfaces()[0].termination.clone();
        let a = Placement { assignments: vec![Assignment { slot: 0, version: version(1, 0, cells.clone(), 1 << 20) }] };
        let m = OverheadModel::default();
        assert_eq!(transition_time(&a, &a, &m), 0.0);
        assert_eq!(transition_time(&Placement::default(), &a, &m), 1.0 / 128.0);
        let b = Placement { assignments: vec![Assignment { slot: 0, version: version(2, 0, cells, 1 << 20) }] };
        assert_eq!(transition_time(&a, &b, &m), 0.0078125);
        assert_eq!(transition_time(&b, &Placement::default(), &m), 0.0);
        assert!(OverheadModel { pcap_bandwidth: 0.0, energy_per_byte: None }.validate().is_err());
    }

    fn small_config(family: WorkloadFamily, seed: u64) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(WorkloadSpec::new(family, Difficulty::Easy), seed);
        cfg.n_combos = 60;
        cfg.n_layouts = 20;
        cfg.sequence_length = 30;
        cfg
    }

    #[test]
    fn placement_rates_are_ordered_and_deterministic() {
        let cfg = small_config(WorkloadFamily::Bram, 4);
        let bed = Testbed::for_config(bundled::workload_bram(), &cfg).unwrap();
        let r = run_placement_experiment(&bed, &cfg).unwrap();
        let rate = |s| r.metric(s, "placement_rate").unwrap();
        assert!(rate(system::AMORPHOUS) >= rate(system::BEST_EFFORT));
        assert!(rate(system::BEST_EFFORT) >= rate(system::NAIVE));
        let again = run_placement_experiment(&Testbed::for_config(bundled::workload_bram(), &cfg).unwrap(), &cfg).unwrap();
        assert_eq!(serde_json::to_string(&r).unwrap(), serde_json::to_string(&again).unwrap());
    }

    #[test]
    fn naive_only_pool_makes_best_effort_naive() {
        let mut cfg = small_config(WorkloadFamily::Dsp, 2);
        cfg.n_layouts = 0;
        let bed = Testbed::for_config(bundled::workload_dsp(), &cfg).unwrap();
        let r = run_placement_experiment(&bed, &cfg).unwrap();
        assert_eq!(r.metric(system::BEST_EFFORT, "placement_rate"), r.metric(system::NAIVE, "placement_rate"));
        assert_eq!(r.metric(system::BEST_EFFORT, "layout_index"), Some(0.0));
    }

    #[test]
    fn overhead_run_reports_both_systems() {
        let mut cfg = small_config(WorkloadFamily::Dsp, 1);
        cfg.afu_delta = 2;
        cfg.overhead.energy_per_byte = Some(1e-9);
        let bed = Testbed::for_config(bundled::workload_dsp(), &cfg).unwrap();
        let r = run_overhead_experiment(&bed, &cfg).unwrap();
        assert!(r.completed);
        assert_eq!(r.transitions.len(), 2 * (cfg.sequence_length - 1));
        assert!(r.metric(system::STANDARD, "mean_transition_time").unwrap() > 0.0);
        assert!(r.metric(system::AMORPHOUS, "mean_transition_energy").is_some());
        assert!(r.transitions.iter().all(|t| t.seconds >= 0.0));
    }

    #[test]
    fn results_csv_round_trip() {
        let mut r = ExperimentResult {
            experiment: ExperimentKind::Overhead,
            workload: WorkloadSpec::new(WorkloadFamily::Mixed, Difficulty::Hard),
            seed: 9,
            afu_delta: Some(3),
            pool_id: "x".into(),
            completed: true,
            metrics: vec![],
            transitions: vec![],
        };
        r.push("standard", "mean_transition_time", 0.25);
        let mut buf = Vec::new();
        write_results_csv(&[r], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# adpr-results v1\nworkload,difficulty,system,metric,value,seed,afu_delta\n"));
        let rows = read_results_csv(&text).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].afu_delta, Some(3));
        assert_eq!(rows[0].value, 0.25);
    }
}

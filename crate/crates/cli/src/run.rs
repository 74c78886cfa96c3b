use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use adpr_core::experiments::{
    placement_verdicts, run_overhead_experiment, run_placement_experiment, write_results_csv, ExperimentConfig,
    ExperimentKind, ExperimentResult, Testbed,
};
use adpr_core::layouts::{LayoutPool, PoolFile};
use adpr_core::packing::VerdictRow;
use adpr_core::workloads::{WorkloadFamily, WorkloadSpec};
use adpr_core::{build_device, bundled, Device, DeviceConfig};
use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use crate::RunArgs;

const MANIFEST_FORMAT: &str = "adpr-manifest v1";
const SWEEP_DELTAS: [usize; 4] = [1, 2, 3, 4];

/// Everything needed to reproduce a set of runs.
#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Manifest {
    pub format: String,
    /// A missing overhead sequence fails the whole invocation instead of
    /// being reported as an incomplete cell.
    pub strict: bool,
    pub runs: Vec<RunSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RunSpec {
    pub experiment: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub device: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layout_pool: Option<PathBuf>,
    pub config: ExperimentConfig,
}

#[derive(Serialize)]
struct VerdictOut {
    workload: String,
    difficulty: String,
    seed: u64,
    combo_id: usize,
    system: String,
    feasible: bool,
    search_nodes: u64,
    elapsed_us: u64,
}

#[derive(Serialize)]
struct TransitionOut {
    workload: String,
    difficulty: String,
    seed: u64,
    afu_delta: usize,
    index: usize,
    system: String,
    bytes: u64,
    seconds: f64,
    full_repack: bool,
    relocated: usize,
}

fn base_config(args: &RunArgs, workload: WorkloadSpec) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(workload, args.seed);
    cfg.n_combos = args.n_combos;
    cfg.n_layouts = args.n_layouts;
    cfg.sequence_length = args.length;
    cfg.afu_delta = args.afu_delta;
    cfg.routability_cap = args.routability_cap;
    cfg.version_preference = args.version_preference.into();
    cfg.search_mode = args.search_mode.into();
    let sizes = &mut cfg.size_model;
    sizes.header_bytes = args.header_bytes.unwrap_or(sizes.header_bytes);
    sizes.logic_cell_bytes = args.logic_cell_bytes.unwrap_or(sizes.logic_cell_bytes);
    sizes.bram_bytes = args.bram_bytes.unwrap_or(sizes.bram_bytes);
    sizes.dsp_bytes = args.dsp_bytes.unwrap_or(sizes.dsp_bytes);
    cfg
}

pub fn manifest_for(args: &RunArgs) -> Manifest {
    let spec = |experiment, config| RunSpec {
        experiment,
        device: args.device.clone(),
        layout_pool: args.layout_pool.clone(),
        config,
    };
    let mut runs = Vec::new();
    if args.sweep {
        for w in WorkloadSpec::grid() {
            runs.push(spec(ExperimentKind::Placement, base_config(args, w)));
        }
        for w in WorkloadSpec::grid() {
            for delta in SWEEP_DELTAS {
                let mut cfg = base_config(args, w);
                cfg.afu_delta = delta;
                runs.push(spec(ExperimentKind::Overhead, cfg));
            }
        }
    } else {
        let w = WorkloadSpec::new(args.workload, args.difficulty);
        runs.push(spec(args.experiment, base_config(args, w)));
    }
    Manifest { format: MANIFEST_FORMAT.into(), strict: !args.sweep, runs }
}

pub fn run(args: &RunArgs) -> anyhow::Result<()> {
    execute(&manifest_for(args), &args.out, args.verdicts, args.transitions)
}

pub fn replay(manifest: &Path, out: &Path) -> anyhow::Result<()> {
    let text = fs::read_to_string(manifest).with_context(|| format!("reading {}", manifest.display()))?;
    let m: Manifest = serde_json::from_str(&text).with_context(|| format!("parsing {}", manifest.display()))?;
    if m.format != MANIFEST_FORMAT {
        return Err(adpr_core::Error::Config(format!("unsupported manifest format {:?}", m.format)).into());
    }
    execute(&m, out, false, false)
}

fn load_device(path: Option<&Path>, family: WorkloadFamily) -> anyhow::Result<Device> {
    match path {
        None => Ok(bundled::device(family)),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let cfg = DeviceConfig::from_json(&text).with_context(|| format!("parsing {}", p.display()))?;
            Ok(build_device(&cfg)?)
        }
    }
}

pub fn load_pool(device: &Device, path: &Path) -> anyhow::Result<LayoutPool> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: PoolFile = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(LayoutPool::from_file(device, &file)?)
}

/// Testbeds depend only on the device, seed, pool size and layout options.
fn testbed_key(spec: &RunSpec) -> anyhow::Result<String> {
    Ok(serde_json::to_string(&(
        &spec.device,
        &spec.layout_pool,
        spec.config.workload.family,
        spec.config.seed,
        spec.config.n_layouts,
        &spec.config.layouts,
    ))?)
}

fn execute(manifest: &Manifest, out: &Path, verdicts: bool, transitions: bool) -> anyhow::Result<()> {
    for spec in &manifest.runs {
        spec.config.validate()?;
    }
    let mut beds: HashMap<String, Testbed> = HashMap::new();
    let mut results: Vec<ExperimentResult> = Vec::new();
    let mut verdict_rows = Vec::new();
    let mut incomplete = None;
    for spec in &manifest.runs {
        let cfg = &spec.config;
        let key = testbed_key(spec)?;
        if !beds.contains_key(&key) {
            let device = load_device(spec.device.as_deref(), cfg.workload.family)?;
            let bed = match &spec.layout_pool {
                Some(p) => Testbed::with_pool(device.clone(), load_pool(&device, p)?),
                None => Testbed::for_config(device, cfg)?,
            };
            beds.insert(key.clone(), bed);
        }
        let bed = &beds[&key];
        let result = match spec.experiment {
            ExperimentKind::Placement => {
                if verdicts {
                    verdict_rows.push((cfg.workload, cfg.seed, placement_verdicts(bed, cfg)?));
                }
                run_placement_experiment(bed, cfg)?
            }
            ExperimentKind::Overhead => run_overhead_experiment(bed, cfg)?,
        };
        if !result.completed {
            let built = result.metric("standard", "sequence_built").unwrap_or(0.0) as usize;
            eprintln!(
                "{} afu-delta {}: overhead sequence stalled after {built} of {} combinations",
                cfg.workload, cfg.afu_delta, cfg.sequence_length
            );
            incomplete.get_or_insert(adpr_core::Error::SequenceConstruction { requested: cfg.sequence_length, built });
        }
        results.push(result);
    }

    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut csv = Vec::new();
    write_results_csv(&results, &mut csv)?;
    fs::write(out.join("results.csv"), csv)?;
    let mut json = serde_json::to_string_pretty(manifest)?;
    json.push('\n');
    fs::write(out.join("manifest.json"), json)?;
    if verdicts {
        write_verdicts(&out.join("verdicts.csv"), &verdict_rows)?;
    }
    if transitions {
        write_transitions(&out.join("transitions.csv"), &results)?;
    }
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "wrote {} results to {}", results.len(), out.display())?;

    match incomplete {
        Some(err) if manifest.strict => bail!(err),
        _ => Ok(()),
    }
}

fn write_verdicts(path: &Path, rows: &[(WorkloadSpec, u64, Vec<VerdictRow>)]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for (workload, seed, batch) in rows {
        for row in batch {
            w.serialize(VerdictOut {
                workload: workload.family.to_string(),
                difficulty: workload.difficulty.to_string(),
                seed: *seed,
                combo_id: row.combo_id,
                system: row.system.clone(),
                feasible: row.feasible,
                search_nodes: row.search_nodes,
                elapsed_us: row.elapsed_us,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_transitions(path: &Path, results: &[ExperimentResult]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in results {
        for t in &r.transitions {
            w.serialize(TransitionOut {
                workload: r.workload.family.to_string(),
                difficulty: r.workload.difficulty.to_string(),
                seed: r.seed,
                afu_delta: r.afu_delta.unwrap_or_default(),
                index: t.index,
                system: t.system.clone(),
                bytes: t.bytes,
                seconds: t.seconds,
                full_repack: t.full_repack,
                relocated: t.relocated,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

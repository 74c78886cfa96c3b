//! Synthetic AFU libraries and the samplers that draw demanded
//! combinations and transition sequences from them.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::afu::AfuSpec;
use crate::error::{Error, Result};
use crate::fabric::InterfaceKind;
use crate::footprint::ResourceVector;
use crate::packing::Combination;

/// Logic demand shared by every non-zero synthetic AFU.
pub const LOGIC_DEMAND: u32 = 500;
/// Spacing of the BRAM and DSP demand grids.
pub const DEMAND_STEP: u32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum WorkloadFamily {
    Bram,
    Dsp,
    Mixed,
}

impl WorkloadFamily {
    pub const ALL: [WorkloadFamily; 3] = [WorkloadFamily::Bram, WorkloadFamily::Dsp, WorkloadFamily::Mixed];

    /// Interface kind the family's device provides.
    pub fn interface_kind(self) -> InterfaceKind {
        match self {
            WorkloadFamily::Bram => InterfaceKind::Memory,
            WorkloadFamily::Dsp => InterfaceKind::Streaming,
            WorkloadFamily::Mixed => InterfaceKind::Both,
        }
    }
}

impl fmt::Display for WorkloadFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WorkloadFamily::Bram => "bram",
            WorkloadFamily::Dsp => "dsp",
            WorkloadFamily::Mixed => "mixed",
        })
    }
}

impl FromStr for WorkloadFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bram" => Ok(WorkloadFamily::Bram),
            "dsp" => Ok(WorkloadFamily::Dsp),
            "mixed" => Ok(WorkloadFamily::Mixed),
            _ => Err(Error::InvalidParameter(format!("unknown workload family {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Difficulty {
    Easy,
    Hard,
    Harder,
}

impl Difficulty {
    pub const ALL: [Difficulty; 3] = [Difficulty::Easy, Difficulty::Hard, Difficulty::Harder];
}

impl fmt::Display for Difficulty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Difficulty::Easy => "easy",
            Difficulty::Hard => "hard",
            Difficulty::Harder => "harder",
        })
    }
}

impl FromStr for Difficulty {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "easy" => Ok(Difficulty::Easy),
            "hard" => Ok(Difficulty::Hard),
            "harder" => Ok(Difficulty::Harder),
            _ => Err(Error::InvalidParameter(format!("unknown difficulty {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct WorkloadSpec {
    pub family: WorkloadFamily,
    pub difficulty: Difficulty,
}

impl WorkloadSpec {
    pub fn new(family: WorkloadFamily, difficulty: Difficulty) -> Self {
        WorkloadSpec { family, difficulty }
    }

    /// Every family × difficulty pair, family-major.
    pub fn grid() -> Vec<WorkloadSpec> {
        WorkloadFamily::ALL
            .into_iter()
            .flat_map(|f| Difficulty::ALL.into_iter().map(move |d| WorkloadSpec::new(f, d)))
            .collect()
    }

    /// Largest BRAM or DSP demand in the library.
    pub fn ceiling(&self) -> u32 {
        let base = match self.family {
            WorkloadFamily::Bram | WorkloadFamily::Mixed => 20,
            WorkloadFamily::Dsp => 30,
        };
        base + 10 * self.difficulty as u32
    }
}

impl fmt::Display for WorkloadSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.family, self.difficulty)
    }
}

fn zero_afu(kind: InterfaceKind) -> AfuSpec {
    AfuSpec { id: "zero".into(), demand: ResourceVector::ZERO, interface_kind: kind }
}

fn grid_afus(prefix: &str, ceiling: u32, kind: InterfaceKind, demand: impl Fn(u32) -> ResourceVector) -> Vec<AfuSpec> {
    (1..=ceiling / DEMAND_STEP)
        .map(|i| i * DEMAND_STEP)
        .map(|n| AfuSpec { id: format!("{prefix}-{n:02}"), demand: demand(n), interface_kind: kind })
        .collect()
}

/// The AFU library of `spec`: the zero-demand AFU first, then BRAM AFUs,
/// then DSP AFUs, each in increasing demand.
pub fn build_library(spec: WorkloadSpec) -> Vec<AfuSpec> {
    let c = spec.ceiling();
    let bram = |n| ResourceVector::new(LOGIC_DEMAND, n, 0);
    let dsp = |n| ResourceVector::new(LOGIC_DEMAND, 0, n);
    let mut lib = Vec::new();
    match spec.family {
        WorkloadFamily::Bram => {
            lib.push(zero_afu(InterfaceKind::Memory));
            lib.extend(grid_afus("bram", c, InterfaceKind::Memory, bram));
        }
        WorkloadFamily::Dsp => {
            lib.push(zero_afu(InterfaceKind::Streaming));
            lib.extend(grid_afus("dsp", c, InterfaceKind::Streaming, dsp));
        }
        WorkloadFamily::Mixed => {
            lib.push(zero_afu(InterfaceKind::Memory));
            lib.extend(grid_afus("bram", c, InterfaceKind::Memory, bram));
            lib.extend(grid_afus("dsp", c, InterfaceKind::Streaming, dsp));
        }
    }
    lib
}

/// `n` combinations of `n_interfaces` slots, each slot drawn uniformly
/// with replacement from `library`.
pub fn sample_combinations(
    library: &[AfuSpec],
    n: usize,
    n_interfaces: usize,
    rng: &mut impl rand::Rng,
) -> Result<Vec<Combination>> {
    if library.is_empty() {
        return Err(Error::EmptyLibrary);
    }
    Ok((0..n)
        .map(|_| Combination::new((0..n_interfaces).map(|_| rng.gen_range(0..library.len())).collect()))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Sequence {
    pub combos: Vec<Combination>,
    pub afu_delta: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SequenceOptions {
    /// Redraw a changed slot until it holds a different AFU, so consecutive
    /// combinations differ in exactly `afu_delta` slots.
    pub redraw_until_different: bool,
    /// Candidate draws allowed per sequence position.
    pub retry_budget: usize,
}

impl Default for SequenceOptions {
    fn default() -> Self {
        SequenceOptions { redraw_until_different: true, retry_budget: 10_000 }
    }
}

/// A feasibility check a sequence member must pass.
pub type Validator<'a> = &'a (dyn Fn(&Combination) -> bool + Sync);

/// Builds a sequence of `length` combinations, each accepted by every
/// validator. Each step picks `afu_delta` distinct slots uniformly and
/// gives each a fresh draw; rejected candidates are redrawn from the same
/// predecessor until the retry budget runs out.
pub fn sample_sequence(
    library: &[AfuSpec],
    length: usize,
    afu_delta: usize,
    n_interfaces: usize,
    validators: &[Validator<'_>],
    opts: &SequenceOptions,
    rng: &mut impl rand::Rng,
) -> Result<Sequence> {
    if library.is_empty() {
        return Err(Error::EmptyLibrary);
    }
    if afu_delta == 0 || afu_delta > n_interfaces {
        return Err(Error::InvalidParameter(format!("afu delta {afu_delta} not in 1..={n_interfaces}")));
    }
    if validators.is_empty() {
        return Err(Error::InvalidParameter("sequence needs at least one validator".into()));
    }
    if opts.redraw_until_different && library.len() < 2 {
        return Err(Error::InvalidParameter("redrawing until different needs two or more AFUs".into()));
    }
    let valid = |c: &Combination| validators.iter().all(|v| v(c));
    let stalled = |built| Error::SequenceConstruction { requested: length, built };
    let mut combos: Vec<Combination> = Vec::with_capacity(length);
    if length == 0 {
        return Ok(Sequence { combos, afu_delta });
    }

    let mut first = None;
    for _ in 0..opts.retry_budget {
        let c = Combination::new((0..n_interfaces).map(|_| rng.gen_range(0..library.len())).collect());
        if valid(&c) {
            first = Some(c);
            break;
        }
    }
    combos.push(first.ok_or_else(|| stalled(0))?);

    while combos.len() < length {
        let prev = combos.last().expect("non-empty").slots().to_vec();
        let mut next = None;
        for _ in 0..opts.retry_budget {
            let mut slots = prev.clone();
            for s in sample(rng, n_interfaces, afu_delta).into_iter() {
                slots[s] = if opts.redraw_until_different {
                    let r = rng.gen_range(0..library.len() - 1);
                    if r >= prev[s] {
                        r + 1
                    } else {
                        r
                    }
                } else {
                    rng.gen_range(0..library.len())
                };
            }
            let c = Combination::new(slots);
            if valid(&c) {
                next = Some(c);
                break;
            }
        }
        combos.push(next.ok_or_else(|| stalled(combos.len()))?);
    }
    Ok(Sequence { combos, afu_delta })
}

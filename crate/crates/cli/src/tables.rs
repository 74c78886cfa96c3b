use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use adpr_core::experiments::{read_results_csv, system, ResultRow};
use adpr_core::workloads::{Difficulty, WorkloadFamily};
use anyhow::Context;
use serde::Serialize;

#[derive(Serialize)]
struct Row {
    workload: WorkloadFamily,
    difficulty: Difficulty,
    #[serde(skip_serializing_if = "Option::is_none")]
    afu_delta: Option<usize>,
    system: String,
    mean: f64,
    min: f64,
    max: f64,
    seeds: usize,
}

type Key = (WorkloadFamily, Difficulty, Option<usize>, String);

fn aggregate<'a>(rows: impl Iterator<Item = &'a ResultRow>, scale: f64) -> anyhow::Result<Vec<Row>> {
    let mut groups: BTreeMap<Key, Vec<f64>> = BTreeMap::new();
    for r in rows {
        let key = (r.workload.parse()?, r.difficulty.parse()?, r.afu_delta, r.system.clone());
        groups.entry(key).or_default().push(r.value * scale);
    }
    Ok(groups
        .into_iter()
        .map(|((workload, difficulty, afu_delta, system), v)| Row {
            workload,
            difficulty,
            afu_delta,
            system,
            mean: v.iter().sum::<f64>() / v.len() as f64,
            min: v.iter().copied().fold(f64::INFINITY, f64::min),
            max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            seeds: v.len(),
        })
        .collect())
}

fn write(path: &Path, rows: &[Row]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Pools results across seeds into three tables: placement rate per
/// (workload, difficulty, system); mean transition time in milliseconds per
/// (workload, difficulty, AFU delta, system); and the standard/amorphous
/// time ratio on the same axes.
pub fn tables(inputs: &[PathBuf], out: &Path) -> anyhow::Result<()> {
    let mut rows = Vec::new();
    for p in inputs {
        let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        rows.extend(read_results_csv(&text).with_context(|| format!("parsing {}", p.display()))?);
    }
    let rates = aggregate(rows.iter().filter(|r| r.metric == "placement_rate"), 1.0)?;
    let times = aggregate(
        rows.iter()
            .filter(|r| r.metric == "mean_transition_time" && r.system != system::RATIO),
        1e3,
    )?;
    let ratios = aggregate(rows.iter().filter(|r| r.metric == "mean_transition_time_ratio"), 1.0)?;

    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write(&out.join("placement_rates.csv"), &rates)?;
    write(&out.join("overhead_times_ms.csv"), &times)?;
    write(&out.join("overhead_ratios.csv"), &ratios)?;
    println!(
        "wrote {} placement, {} overhead and {} ratio rows to {}",
        rates.len(),
        times.len(),
        ratios.len(),
        out.display()
    );
    Ok(())
}

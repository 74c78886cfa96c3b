use std::fs;
use std::path::Path;

use adpr_core::afu::{build_db_from_layouts, RoutabilityCap, Synthesizer};
use adpr_core::experiments::Testbed;
use adpr_core::layouts::RandomLayoutOptions;
use adpr_core::workloads::{build_library, Difficulty, WorkloadFamily, WorkloadSpec};
use adpr_core::{build_device, bundled, place_interfaces_peripheral, Device, DeviceConfig, InterfaceKind, SizeModel};
use anyhow::Context;

use crate::PoolArgs;

fn device_for(path: Option<&Path>, family: WorkloadFamily) -> anyhow::Result<Device> {
    match path {
        None => Ok(bundled::device(family)),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Ok(build_device(&DeviceConfig::from_json(&text)?)?)
        }
    }
}

fn testbed(args: &PoolArgs) -> anyhow::Result<Testbed> {
    let device = device_for(args.device.as_deref(), args.workload)?;
    Ok(Testbed::new(device, args.n_layouts, args.seed, &RandomLayoutOptions::default())?)
}

pub fn layouts(args: &PoolArgs) -> anyhow::Result<()> {
    let bed = testbed(args)?;
    let mut json = serde_json::to_string_pretty(&bed.pool.to_file(&bed.device))?;
    json.push('\n');
    match &args.out {
        Some(p) => {
            fs::write(p, json).with_context(|| format!("writing {}", p.display()))?;
            eprintln!("pool {} with {} layouts written to {}", bed.pool_id, bed.pool.len(), p.display());
        }
        None => print!("{json}"),
    }
    Ok(())
}

pub fn db(args: &PoolArgs, difficulty: Difficulty, cap: f64) -> anyhow::Result<()> {
    let bed = testbed(args)?;
    let library = build_library(WorkloadSpec::new(args.workload, difficulty));
    let synth = Synthesizer::new(&bed.device, RoutabilityCap::new(cap)?, SizeModel::default());
    let db = build_db_from_layouts(&synth, bed.pool.layouts(), &library);
    let out = args.out.clone().unwrap_or_else(|| "db".into());
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let mut json = serde_json::to_string_pretty(&db.to_file(&bed.device))?;
    json.push('\n');
    fs::write(out.join("db.json"), json)?;
    db.write_summary_csv(fs::File::create(out.join("db.csv"))?)?;
    println!("{} versions from pool {} written to {}", db.len(), bed.pool_id, out.display());
    Ok(())
}

pub fn device(family: WorkloadFamily, path: Option<&Path>, place: Option<usize>, kind: InterfaceKind) -> anyhow::Result<()> {
    let mut device = device_for(path, family)?;
    if let Some(n) = place {
        let interfaces = place_interfaces_peripheral(&device, n, kind)?;
        device = device.with_interfaces(interfaces)?;
    }
    let budget = device.budget();
    eprintln!(
        "{}: {}x{} cells, uncommitted {budget}, {} interfaces",
        device.name(),
        device.cols(),
        device.rows(),
        device.interfaces().len()
    );
    println!("{}", device.to_config().to_json_pretty()?);
    Ok(())
}

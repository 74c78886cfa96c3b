use std::path::PathBuf;
use std::process::ExitCode;

use adpr_core::experiments::ExperimentKind;
use adpr_core::packing::{SearchMode, VersionPreference};
use adpr_core::workloads::{Difficulty, WorkloadFamily};
use adpr_core::InterfaceKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

mod inspect;
mod run;
mod tables;

const EXIT_OTHER: u8 = 1;
const EXIT_CONFIG: u8 = 3;
const EXIT_SEQUENCE: u8 = 4;
const EXIT_LAYOUT: u8 = 5;

#[derive(Parser)]
#[command(name = "adpr", version, about = "Fixed-partition vs. flexible-footprint partial reconfiguration experiments")]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment, or the full grid with --sweep.
    Run(RunArgs),
    /// Rerun every experiment recorded in a manifest.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Aggregate results files into plot-ready long-format tables.
    Tables {
        /// Results CSV files; rows from all of them are pooled.
        #[arg(required = true)]
        results: Vec<PathBuf>,
        #[arg(long, default_value = "tables")]
        out: PathBuf,
    },
    /// Dump the layout pool (naive layout first) as JSON.
    Layouts(PoolArgs),
    /// Build the amorphous version database and dump it as JSON and CSV.
    Db {
        #[command(flatten)]
        pool: PoolArgs,
        #[arg(long, default_value = "easy")]
        difficulty: Difficulty,
        #[arg(long, default_value_t = 0.7)]
        routability_cap: f64,
    },
    /// Print a device config, optionally re-placing its interfaces.
    Device {
        #[arg(long, default_value = "bram")]
        workload: WorkloadFamily,
        /// Device config JSON instead of the bundled one.
        #[arg(long)]
        device: Option<PathBuf>,
        /// Replace the interfaces with this many evenly spaced peripheral ones.
        #[arg(long)]
        place: Option<usize>,
        #[arg(long, value_enum, default_value = "memory")]
        kind: KindArg,
    },
}

#[derive(Args, Clone)]
struct RunArgs {
    #[arg(long, default_value = "placement", conflicts_with = "sweep")]
    experiment: ExperimentKind,
    #[arg(long, default_value = "bram", conflicts_with = "sweep")]
    workload: WorkloadFamily,
    #[arg(long, default_value = "easy", conflicts_with = "sweep")]
    difficulty: Difficulty,
    #[arg(long)]
    seed: u64,
    /// Device config JSON used for every workload instead of the bundled ones.
    #[arg(long)]
    device: Option<PathBuf>,
    /// Layout pool JSON (from `adpr layouts`) instead of generating one.
    #[arg(long, conflicts_with = "sweep")]
    layout_pool: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    n_combos: usize,
    #[arg(long, default_value_t = 1000)]
    n_layouts: usize,
    /// Overhead sequence length.
    #[arg(long, default_value_t = 1000)]
    length: usize,
    #[arg(long, default_value_t = 1, conflicts_with = "sweep")]
    afu_delta: usize,
    #[arg(long, default_value_t = 0.7)]
    routability_cap: f64,
    #[arg(long)]
    header_bytes: Option<u64>,
    #[arg(long)]
    logic_cell_bytes: Option<u64>,
    #[arg(long)]
    bram_bytes: Option<u64>,
    #[arg(long)]
    dsp_bytes: Option<u64>,
    #[arg(long, value_enum, default_value = "canonical")]
    version_preference: PreferenceArg,
    #[arg(long, value_enum, default_value = "exact")]
    search_mode: ModeArg,
    /// Run every workload and difficulty for placement, and AFU deltas 1-4
    /// for overhead.
    #[arg(long)]
    sweep: bool,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Also write per-combination verdicts (includes wall-clock timings).
    #[arg(long)]
    verdicts: bool,
    /// Also write per-transition overhead records.
    #[arg(long)]
    transitions: bool,
}

#[derive(Args, Clone)]
struct PoolArgs {
    #[arg(long, default_value = "bram")]
    workload: WorkloadFamily,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    n_layouts: usize,
    #[arg(long)]
    device: Option<PathBuf>,
    /// Output directory (`db`) or file (`layouts`); stdout when omitted for `layouts`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy)]
enum PreferenceArg {
    Canonical,
    Smallest,
}

impl From<PreferenceArg> for VersionPreference {
    fn from(p: PreferenceArg) -> Self {
        match p {
            PreferenceArg::Canonical => VersionPreference::Canonical,
            PreferenceArg::Smallest => VersionPreference::Smallest,
        }
    }
}

#[derive(ValueEnum, Clone, Copy)]
enum ModeArg {
    Exact,
    Greedy,
}

impl From<ModeArg> for SearchMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Exact => SearchMode::Exact,
            ModeArg::Greedy => SearchMode::Greedy,
        }
    }
}

#[derive(ValueEnum, Clone, Copy)]
enum KindArg {
    Memory,
    Streaming,
    Both,
}

impl From<KindArg> for InterfaceKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Memory => InterfaceKind::Memory,
            KindArg::Streaming => InterfaceKind::Streaming,
            KindArg::Both => InterfaceKind::Both,
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use adpr_core::Error as E;
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::SequenceConstruction { .. } => EXIT_SEQUENCE,
                E::LayoutGeneration { .. } | E::NaiveLayoutInfeasible { .. } => EXIT_LAYOUT,
                E::Io(_) | E::Csv(_) | E::OracleBoundExceeded { .. } => EXIT_OTHER,
                _ => EXIT_CONFIG,
            };
        }
        if cause.is::<serde_json::Error>() {
            return EXIT_CONFIG;
        }
    }
    EXIT_OTHER
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.command {
        Command::Run(args) => run::run(&args),
        Command::Replay { manifest, out } => run::replay(&manifest, &out),
        Command::Tables { results, out } => tables::tables(&results, &out),
        Command::Layouts(args) => inspect::layouts(&args),
        Command::Db { pool, difficulty, routability_cap } => inspect::db(&pool, difficulty, routability_cap),
        Command::Device { workload, device, place, kind } => inspect::device(workload, device.as_deref(), place, kind.into()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

//! opuc-lab: reproducible experiments on Szegő matrices, Prüfer flows,
//! WKB-transform norms, and bad-set scans.
//!
//! Every command resolves its parameters (config file keys overridden by
//! flags), runs inside a sized worker pool, writes CSV/JSON artifacts, and
//! records a manifest with input/output hashes. `rerun` replays a manifest
//! bit-identically; `report` folds manifests into one summary table.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use config::{GenOpts, Params, PartitionDiagOpts, ScanOpts, TrajectoryOpts, WkbBenchOpts};

/// Exit codes: 0 success, 2 numeric failure (partial artifacts flagged),
/// 64 config/schema violation, 65 artifact version mismatch.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(String),
    Version(String),
    Other(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }
    pub fn numeric(msg: impl Into<String>) -> Self {
        CliError::Numeric(msg.into())
    }
    pub fn version(msg: impl Into<String>) -> Self {
        CliError::Version(msg.into())
    }
    pub fn other(msg: impl Into<String>) -> Self {
        CliError::Other(msg.into())
    }

    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 64,
            CliError::Numeric(_) => 2,
            CliError::Version(_) => 65,
            CliError::Other(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m)
            | CliError::Numeric(m)
            | CliError::Version(m)
            | CliError::Other(m) => m,
        }
    }
}

#[derive(Parser)]
#[command(name = "opuc-lab", version, about = "OPUC numerical laboratory")]
struct Cli {
    /// worker pool size (default: OPUC_LAB_WORKERS or all cores)
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// output directory for artifacts and manifests
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a Verblunsky coefficient sequence (CSV + regeneration spec)
    Gen(GenOpts),
    /// Evolve the Szegő recursion at one angle and dump the trajectory
    Evolve(TrajectoryOpts),
    /// Evolve the Prüfer flow, dump the trajectory, cross-check the radius
    PruferCheck(TrajectoryOpts),
    /// Sharp-constant scaling of the WKB transform over a cutoff grid
    WkbBench(WkbBenchOpts),
    /// Dyadic blocks, goal terms, subdivision counts, adaptive cells
    PartitionDiag(PartitionDiagOpts),
    /// Scan an angle grid for sup log‖T_n‖ and super-level dimensions
    Scan(ScanOpts),
    /// Merge run manifests into one summary table
    Report {
        /// manifest JSON files
        inputs: Vec<PathBuf>,
    },
    /// Re-execute a recorded manifest
    Rerun { manifest: PathBuf },
}

fn worker_count(flag: Option<usize>) -> usize {
    flag.or_else(|| {
        std::env::var("OPUC_LAB_WORKERS")
            .ok()
            .and_then(|s| s.parse().ok())
    })
    .filter(|&n| n > 0)
    .unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    })
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let workers = worker_count(cli.workers);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::other(e.to_string()))?;
    let out_dir = cli.out;
    pool.install(move || -> Result<i32, CliError> {
        match cli.command {
            Command::Gen(opts) => {
                commands::dispatch(&Params::Gen(opts.resolve()?), &out_dir, workers)
            }
            Command::Evolve(opts) => commands::dispatch(
                &Params::Evolve(opts.resolve("szego-traj")?),
                &out_dir,
                workers,
            ),
            Command::PruferCheck(opts) => commands::dispatch(
                &Params::PruferCheck(opts.resolve("prufer-traj")?),
                &out_dir,
                workers,
            ),
            Command::WkbBench(opts) => {
                commands::dispatch(&Params::WkbBench(opts.resolve()?), &out_dir, workers)
            }
            Command::PartitionDiag(opts) => {
                commands::dispatch(&Params::PartitionDiag(opts.resolve()?), &out_dir, workers)
            }
            Command::Scan(opts) => {
                commands::dispatch(&Params::Scan(opts.resolve()?), &out_dir, workers)
            }
            Command::Report { inputs } => {
                std::fs::create_dir_all(&out_dir).map_err(|e| CliError::other(e.to_string()))?;
                commands::run_report(&inputs, &out_dir)
            }
            Command::Rerun { manifest } => commands::rerun(&manifest, &out_dir, workers),
        }
    })
}

fn main() {
    // malformed flags are schema violations (64), not clap's default 2,
    // which is reserved for numeric failures
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 64,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {}", e.message());
            std::process::exit(e.exit_code());
        }
    }
}

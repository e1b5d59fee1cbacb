use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use neckflow::cli::{self, ExperimentConfig, ExperimentKind};
use neckflow::Error;

#[derive(Parser)]
#[command(name = "neckflow", version, about = "Geodesic flow through degenerating necks: experiments and figures")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run an experiment; writes CSV tables, summary.json and SVG figures.
    Run {
        config: PathBuf,
        /// Output directory (overrides `output_dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (overrides `workers`, then NECKFLOW_WORKERS).
        #[arg(long)]
        workers: Option<usize>,
        /// Seed for randomized starts (overrides `seed`).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Regenerate the figures of a summary.json.
    Plot {
        report: PathBuf,
        /// Output directory; defaults to the report's directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Only render the figure with this name.
        #[arg(long)]
        figure: Option<String>,
    },
    /// Check a configuration without running it.
    Validate { config: PathBuf },
    /// List the available experiments.
    ListExperiments,
}

fn read_config(path: &Path) -> Result<ExperimentConfig, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    ExperimentConfig::from_json(&text)
}

fn env_workers() -> Result<Option<usize>, Error> {
    match std::env::var("NECKFLOW_WORKERS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|n| *n > 0)
            .map(Some)
            .ok_or_else(|| Error::Config(format!("NECKFLOW_WORKERS must be a positive integer, got {v:?}"))),
        Err(_) => Ok(None),
    }
}

fn print_paths(paths: &[PathBuf]) {
    let list: Vec<String> = paths.iter().map(|p| p.display().to_string()).collect();
    println!("{}", serde_json::json!({ "status": "ok", "artifacts": list }));
}

fn main_inner(cli: Cli) -> Result<(), Error> {
    match cli.cmd {
        Cmd::Run { config, out, workers, seed } => {
            let mut cfg = read_config(&config)?;
            if seed.is_some() {
                cfg.seed = seed;
            }
            if workers == Some(0) {
                return Err(Error::Config("--workers must be at least 1".into()));
            }
            let workers = match workers.or(cfg.workers) {
                Some(n) => n,
                None => env_workers()?.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
            };
            let dir = out
                .or_else(|| cfg.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from("neckflow-out").join(cfg.experiment.name()));
            let paths = cli::run(&cfg, &dir, workers)?;
            print_paths(&paths);
        }
        Cmd::Plot { report, out, figure } => {
            let paths = cli::plot(&report, out.as_deref(), figure.as_deref())?;
            print_paths(&paths);
        }
        Cmd::Validate { config } => {
            let cfg = read_config(&config)?;
            println!("{}", serde_json::json!({ "status": "ok", "experiment": cfg.experiment.name() }));
        }
        Cmd::ListExperiments => {
            for k in ExperimentKind::ALL {
                println!("{:<16} {}", k.name(), k.describe());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", cli::error_json(&e));
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}

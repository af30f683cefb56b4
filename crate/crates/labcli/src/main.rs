//! The `lab` binary: run canned experiments, administer the program
//! cache.
//!
//! Exit status encodes the verdict: 0 when every asserted inequality
//! held, 1 when an experiment ran but some assertion (or a cache
//! verification) failed, 2 on configuration or operational errors. CSV
//! goes to stdout or `--out`; logging, including wall time, goes to
//! stderr so result bytes stay reproducible.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};
use seqlab_cli::cache_admin;
use seqlab_cli::config::ExperimentConfig;
use seqlab_cli::error::CliError;
use seqlab_cli::experiments::{self, Experiment};

#[derive(Parser)]
#[command(
    name = "lab",
    version,
    about = "Desk-scale laboratory for Bayesian and universal sequence prediction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named experiment and emit its result table as CSV.
    Run {
        /// Experiment name; `lab run help-me` lists the catalog in the
        /// error message.
        experiment: String,
        /// Flat key = value configuration file; command-line flags win.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Random seed; required by stochastic experiments.
        #[arg(long)]
        seed: Option<u64>,
        /// Horizon or sweep size, experiment-specific.
        #[arg(long)]
        n: Option<u64>,
        /// Monte Carlo trajectories or permutation count.
        #[arg(long)]
        traj: Option<u64>,
        /// Program-length budget for machine-model experiments.
        #[arg(long = "L")]
        max_len: Option<u32>,
        /// Step budget for machine-model experiments.
        #[arg(long = "T")]
        max_steps: Option<u64>,
        /// Named prior from the catalog.
        #[arg(long)]
        prior: Option<String>,
        /// Named loss matrix from the catalog.
        #[arg(long)]
        loss: Option<String>,
        /// Write CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Administer the enumeration cache (location: $LAB_CACHE_DIR,
    /// default .lab-cache).
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
}

#[derive(Subcommand)]
enum CacheAction {
    /// Enumerate for the given budget and write the cache file.
    Build {
        #[arg(long = "L")]
        max_len: Option<u32>,
        #[arg(long = "T")]
        max_steps: Option<u64>,
    },
    /// Check framing, digest, prefix-freeness, and the Kraft sum.
    Verify {
        #[arg(long = "L")]
        max_len: Option<u32>,
        #[arg(long = "T")]
        max_steps: Option<u64>,
    },
    /// Print the cache header without decoding records.
    Info {
        #[arg(long = "L")]
        max_len: Option<u32>,
        #[arg(long = "T")]
        max_steps: Option<u64>,
    },
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let code = match dispatch(cli) {
        Ok(code) => code,
        Err(CliError::Core(seqlab_core::Error::CacheCorrupt { reason })) => {
            eprintln!("cache verification failed: {reason}");
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    };
    std::process::exit(code);
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Run {
            experiment,
            config,
            seed,
            n,
            traj,
            max_len,
            max_steps,
            prior,
            loss,
            out,
        } => {
            let experiment = Experiment::from_name(&experiment)?;
            let overrides = ExperimentConfig {
                seed,
                n,
                trajectories: traj,
                max_len,
                max_steps,
                prior,
                loss,
                out,
                cache_dir: None,
            };
            let mut cfg = match config {
                Some(path) => ExperimentConfig::from_file(&path, overrides)?,
                None => overrides,
            };
            cfg.cache_dir = Some(cache_admin::cache_dir());
            run_experiment(experiment, &cfg)
        }
        Command::Cache { action } => run_cache(action),
    }
}

fn run_experiment(experiment: Experiment, cfg: &ExperimentConfig) -> Result<i32, CliError> {
    let started = Instant::now();
    let outcome = experiments::run(experiment, cfg)?;
    log::info!(
        "{} finished in {:.3}s",
        experiment.name(),
        started.elapsed().as_secs_f64()
    );

    let csv = outcome.table.to_csv_string();
    match &cfg.out {
        Some(path) => {
            std::fs::write(path, &csv).map_err(|e| CliError::io(path, e))?;
            log::info!("wrote {} to {}", experiment.name(), path.display());
        }
        None => print!("{csv}"),
    }

    if outcome.healthy() {
        Ok(0)
    } else {
        for violation in &outcome.violations {
            eprintln!("violated: {violation}");
        }
        eprintln!(
            "{}: {} assertion(s) failed",
            experiment.name(),
            outcome.violations.len()
        );
        Ok(1)
    }
}

fn run_cache(action: CacheAction) -> Result<i32, CliError> {
    let dir = cache_admin::cache_dir();
    let budget_of = |max_len: Option<u32>, max_steps: Option<u64>| {
        cache_admin::budget_from(&ExperimentConfig {
            max_len,
            max_steps,
            ..ExperimentConfig::default()
        })
    };
    match action {
        CacheAction::Build { max_len, max_steps } => {
            let budget = budget_of(max_len, max_steps)?;
            let started = Instant::now();
            let (path, count) = cache_admin::build(&dir, &budget)?;
            log::info!("enumeration took {:.3}s", started.elapsed().as_secs_f64());
            println!(
                "built {} programs (L = {}, T = {}) at {}",
                count,
                budget.max_len,
                budget.max_steps,
                path.display()
            );
            Ok(0)
        }
        CacheAction::Verify { max_len, max_steps } => {
            let budget = budget_of(max_len, max_steps)?;
            let header = cache_admin::verify(&dir, &budget)?;
            println!(
                "ok: {} programs, instruction set v{}, digest {}",
                header.count,
                header.version,
                hex(&header.digest)
            );
            Ok(0)
        }
        CacheAction::Info { max_len, max_steps } => {
            let budget = budget_of(max_len, max_steps)?;
            let header = cache_admin::info(&dir, &budget)?;
            println!(
                "instruction set v{}, L = {}, T = {}, output cap = {}, {} programs, digest {}",
                header.version,
                header.budget.max_len,
                header.budget.max_steps,
                header.budget.max_output,
                header.count,
                hex(&header.digest)
            );
            Ok(0)
        }
    }
}

fn hex(digest: &[u8; 32]) -> String {
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

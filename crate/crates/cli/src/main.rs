//! Experiment runner for the adaptive accelerated proximal solvers and
//! closed-loop gradient flows.
//!
//! Exit codes: 0 all checks passed, 1 runtime failure or failed checks,
//! 2 configuration error.

mod checks;
mod config;
mod report;
mod run;
mod sweep;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::ExperimentConfig;

#[derive(Parser)]
#[command(
    name = "peas",
    about = "Adaptive accelerated proximal algorithms and closed-loop gradient flows",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one experiment described by a TOML config file.
    Run {
        config: PathBuf,
        /// Output root (overrides the config's `output`); runs write into a
        /// timestamped subdirectory unless --force.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Write directly into the output root, overwriting existing files.
        #[arg(long)]
        force: bool,
        /// Override the problem seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the parameter grid of the config's [sweep] section.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        force: bool,
        /// Worker pool size (default: CPU count).
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the built-in acceptance suite and print one line per criterion.
    Verify,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            config,
            output,
            force,
            seed,
        } => cmd_run(&config, output, force, seed),
        Command::Sweep {
            config,
            output,
            force,
            jobs,
            seed,
        } => cmd_sweep(&config, output, force, jobs, seed),
        Command::Verify => cmd_verify(),
    }
}

fn load_config(path: &std::path::Path, seed: Option<u64>) -> Result<ExperimentConfig, ExitCode> {
    match ExperimentConfig::load(path) {
        Ok(mut config) => {
            if let Some(seed) = seed {
                config.problem.seed = seed;
            }
            Ok(config)
        }
        Err(error) => {
            eprintln!("error: {error}");
            Err(ExitCode::from(2))
        }
    }
}

fn output_root(config: &ExperimentConfig, flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| config.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"))
}

fn cmd_run(path: &Path, output: Option<PathBuf>, force: bool, seed: Option<u64>) -> ExitCode {
    let config = match load_config(path, seed) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let base = output_root(&config, output);
    let dir = match run::resolve_run_dir(&base, force) {
        Ok(dir) => dir,
        Err(error) => {
            eprintln!("error: {error:#}");
            return ExitCode::from(1);
        }
    };
    match run::execute(&config).and_then(|run| {
        run::write_artifacts(&dir, &config, &run)?;
        Ok(run)
    }) {
        Ok(run) => {
            println!("wrote {}", dir.display());
            for verdict in &run.verdicts {
                let status = if verdict.passed {
                    "PASS"
                } else if verdict.inconclusive {
                    "????"
                } else {
                    "FAIL"
                };
                println!(
                    "[{status}] {}: measured {:.4e} vs target {:.4e} (tol {:.1e})",
                    verdict.name, verdict.measured, verdict.target, verdict.tolerance
                );
            }
            if run.all_passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(error) => {
            eprintln!("error: {error:#}");
            ExitCode::from(1)
        }
    }
}

fn cmd_sweep(
    path: &Path,
    output: Option<PathBuf>,
    force: bool,
    jobs: Option<usize>,
    seed: Option<u64>,
) -> ExitCode {
    let config = match load_config(path, seed) {
        Ok(c) => c,
        Err(code) => return code,
    };
    if config.sweep.is_none() {
        eprintln!("error: sweep requires a [sweep] section in the config");
        return ExitCode::from(2);
    }
    let base = output_root(&config, output);
    let dir = match run::resolve_run_dir(&base, force) {
        Ok(dir) => dir,
        Err(error) => {
            eprintln!("error: {error:#}");
            return ExitCode::from(1);
        }
    };
    match sweep::run_sweep(&config, &dir, jobs) {
        Ok(outcome) => {
            println!(
                "wrote {} ({} cells, {} failed)",
                dir.display(),
                outcome.cells,
                outcome.failed_cells
            );
            ExitCode::SUCCESS
        }
        Err(error) => {
            eprintln!("error: {error:#}");
            ExitCode::from(1)
        }
    }
}

fn cmd_verify() -> ExitCode {
    let results = peas::acceptance::run_all();
    let mut all_passed = true;
    for result in &results {
        println!("{}", result.line());
        all_passed &= result.passed;
    }
    println!(
        "{}/{} criteria passed",
        results.iter().filter(|r| r.passed).count(),
        results.len()
    );
    if all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

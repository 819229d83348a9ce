//! Command-line experiment runner: `gen` materializes problem instances,
//! `solve` runs one algorithm on a stored instance, `bench` executes a
//! full sweep and writes results.csv / summary.csv / config.echo.json.
//!
//! Exit codes: 0 success, 1 configuration error, 2 runtime failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hardshrink_cli::config::{Algorithm, ExperimentConfig};
use hardshrink_cli::runner;

#[derive(Parser)]
#[command(name = "hardshrink", version, about = "Sparse-recovery benchmark harness")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate and serialize the instances a config describes.
    Gen {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a single algorithm on a stored instance; prints one JSON row.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        algo: String,
        /// Projected sparsity (defaults to the instance's s*).
        #[arg(long)]
        s: Option<usize>,
        /// Expansion / partial level for pht-style algorithms.
        #[arg(long)]
        l: Option<usize>,
        /// Step size; estimated from the instance when omitted.
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long, default_value_t = 1000)]
        max_iters: usize,
    },
    /// Run a full sweep from a config file.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
}

const EXIT_CONFIG: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

struct Failure {
    code: u8,
    message: String,
}

fn config_failure(msg: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_CONFIG,
        message: msg.into(),
    }
}

fn runtime_failure(msg: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_RUNTIME,
        message: msg.into(),
    }
}

fn load_config(path: &Path) -> Result<ExperimentConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_failure(format!("cannot read config {}: {e}", path.display())))?;
    let mut cfg = ExperimentConfig::from_json(&text)
        .map_err(|e| config_failure(format!("{e}")))?;
    if let Ok(seed_text) = std::env::var("HARDSHRINK_SEED") {
        let seed: u64 = seed_text
            .trim()
            .parse()
            .map_err(|_| config_failure(format!("HARDSHRINK_SEED={seed_text:?} is not a u64")))?;
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text)
        .map_err(|e| runtime_failure(format!("cannot write {}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.cmd {
        Command::Gen { config, out } => {
            let cfg = load_config(&config)?;
            std::fs::create_dir_all(&out)
                .map_err(|e| runtime_failure(format!("cannot create {}: {e}", out.display())))?;
            let count = runner::generate_cells(&cfg, &out).map_err(|e| match e {
                hardshrink::Error::InvalidArgument(_) => config_failure(e.to_string()),
                other => runtime_failure(other.to_string()),
            })?;
            eprintln!("wrote {count} instances under {}", out.display());
            Ok(())
        }
        Command::Solve {
            instance,
            algo,
            s,
            l,
            eta,
            max_iters,
        } => {
            let alg = Algorithm::parse(&algo).map_err(|e| config_failure(e.to_string()))?;
            let inst = hardshrink::statgen::load_instance(&instance)
                .map_err(|e| runtime_failure(e.to_string()))?;
            let row = runner::solve_single(&inst, &alg, s, l, eta, max_iters)
                .map_err(|e| runtime_failure(e.to_string()))?;
            let json = serde_json::to_string_pretty(&row)
                .map_err(|e| runtime_failure(e.to_string()))?;
            println!("{json}");
            Ok(())
        }
        Command::Bench {
            config,
            out,
            threads,
        } => {
            let cfg = load_config(&config)?;
            std::fs::create_dir_all(&out)
                .map_err(|e| runtime_failure(format!("cannot create {}: {e}", out.display())))?;
            let echo = serde_json::to_string_pretty(&cfg)
                .map_err(|e| runtime_failure(e.to_string()))?;
            write_file(&out.join("config.echo.json"), &echo)?;
            let outcome = runner::run_experiment(&cfg, threads)
                .map_err(|e| runtime_failure(e.to_string()))?;
            write_file(&out.join("results.csv"), &runner::rows_to_csv(&outcome.rows))?;
            let summary = runner::sweep_summary(&outcome.rows);
            write_file(&out.join("summary.csv"), &runner::summary_to_csv(&summary))?;
            if !outcome.errors.is_empty() {
                write_file(&out.join("errors.csv"), &runner::errors_to_csv(&outcome.errors))?;
                eprintln!("{} runs failed; see errors.csv", outcome.errors.len());
            }
            if outcome.rows.is_empty() {
                return Err(runtime_failure("all cells failed"));
            }
            eprintln!(
                "wrote {} rows to {}",
                outcome.rows.len(),
                out.join("results.csv").display()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version are not errors.
            if e.use_stderr() {
                eprintln!("{e}");
                return ExitCode::from(EXIT_CONFIG);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

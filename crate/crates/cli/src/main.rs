//! Command line front end: reproducible experiments and reports driven by a
//! single JSON configuration file.
//!
//! Exit codes: 0 all good, 1 a check failed, 2 configuration or I/O error.

mod commands;
mod config;
mod manifest;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use config::{Config, DiagramsConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "drcm", version, about = "Dynamic random connection model toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Path to the JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the seed given in the configuration file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Cap the number of worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for CSV/JSON artifacts and the run manifest.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the model and export count step functions (and sample tensors).
    Simulate,
    /// Evaluate profile integrals, exact moments, and limit covariances.
    Theory,
    /// Check simulations and formulas against exact values; exit 0 iff all pass.
    Verify,
    /// Evaluate moment formulas for one row structure against brute-force oracles.
    Diagrams {
        /// Comma-separated row sizes, e.g. --rows 2,2
        #[arg(long, value_delimiter = ',', required = true)]
        rows: Vec<usize>,
    },
}

fn run(cli: Cli) -> Result<i32> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let path = cli
        .config
        .as_deref()
        .context("--config PATH is required")?;
    let raw = config::load_raw(path)?;
    match cli.command {
        Command::Diagrams { rows } => {
            let dcfg: DiagramsConfig = serde_json::from_str(&raw)
                .context("parsing diagrams model file")?;
            let seed = cli.seed.unwrap_or(dcfg.seed);
            commands::diagrams(&rows, &dcfg, &raw, path, seed, &cli.out)
        }
        cmd => {
            let cfg = Config::parse(&raw)?;
            let seed = cli.seed.unwrap_or(cfg.seed);
            match cmd {
                Command::Simulate => commands::simulate(&cfg, &raw, path, seed, &cli.out),
                Command::Theory => commands::theory(&cfg, &raw, path, seed, &cli.out),
                Command::Verify => commands::verify(&cfg, &raw, path, seed, &cli.out),
                Command::Diagrams { .. } => unreachable!("handled above"),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

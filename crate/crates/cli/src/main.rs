//! `pec`: experiment runner.
//!
//! Exit codes: 0 success, 2 configuration or output error, 3 enumeration
//! budget exceeded, 4 verification failure.

mod artifact;
mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::artifact::Run;
use crate::config::ExperimentConfig;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "pec", version = artifact::VERSION, about = "Post-encryption compression experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML experiment configuration.
    #[arg(long, global = true, env = "PEC_CONFIG")]
    config: Option<PathBuf>,

    #[arg(long, global = true, env = "PEC_OUT_DIR")]
    out_dir: Option<PathBuf>,

    #[arg(long, global = true, env = "PEC_SEED")]
    seed: Option<u64>,

    /// Worker threads; defaults to the number of logical cores.
    #[arg(long, global = true, env = "PEC_THREADS")]
    threads: Option<usize>,

    /// Cap on the elements any exhaustive enumeration may visit.
    #[arg(long, global = true, env = "PEC_BUDGET")]
    budget: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Supporting points of the rate region.
    Region,
    /// E, F and G over a grid of rate pairs.
    Exponent,
    /// Monte Carlo decoding error over a blocklength ladder.
    Simulate,
    /// Exact leakage and its bounds per blocklength and adversary.
    Leakage,
    /// Inequality oracle suite.
    Verify,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Region => "region",
            Command::Exponent => "exponent",
            Command::Simulate => "simulate",
            Command::Leakage => "leakage",
            Command::Verify => "verify",
        }
    }
}

const DEFAULT_SEED: u64 = 1;

fn execute(cli: &Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let threads = match cli.threads {
        Some(0) => return Err(CliError::Config("--threads must be at least 1".into())),
        Some(t) => t,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let out_dir = cli
        .out_dir
        .clone()
        .or_else(|| config.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let seed = cli.seed.or(config.seed).unwrap_or(DEFAULT_SEED);
    let budget = cli.budget.or(config.budget).unwrap_or(pec_core::DEFAULT_BUDGET);
    let name = cli.command.name();
    let run = Run::new(name, &out_dir, seed, budget, threads, &config)?;
    commands::run(name, &run)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pec {}: {e}", cli.command.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

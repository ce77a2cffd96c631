use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use svie_cli::{cmd_picard, cmd_simulate, cmd_verify, RunConfig, EXIT_CHECK_FAILED};

/// Monte Carlo solver and diagnostics for stochastic Volterra equations with jumps.
#[derive(Parser)]
#[command(name = "svie", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration; built-in defaults are used when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `master_seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides `output_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads. Results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Simulate an ensemble; writes paths.csv and summary.json.
    Simulate,
    /// Picard iteration on one path; writes picard.csv and picard.json.
    Picard,
    /// Run every check; writes verify.json.
    Verify,
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.master_seed = seed;
    }
    if let Some(out) = cli.out {
        cfg.output_dir = out;
    }
    let command = cli.command;
    let work = move || match command {
        Command::Simulate => cmd_simulate(&cfg),
        Command::Picard => cmd_picard(&cfg),
        Command::Verify => cmd_verify(&cfg),
    };
    match cli.threads {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()?
            .install(work),
        None => work(),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_CHECK_FAILED as u8)
        }
    }
}

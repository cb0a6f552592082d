//! `ofa` — equilibrium solver, parameter sweeps, stake-dynamics
//! simulation, and verification harness for the order-flow-auction model.

mod commands;
mod config;
mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

/// A configuration problem; mapped to exit code 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

#[derive(Parser)]
#[command(name = "ofa", version, about = "Order-flow-auction equilibrium and stake-dynamics lab")]
struct Cli {
    /// Path to a TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory; overrides the config file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Cap on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Reduced sample sizes for a fast desk-scale run.
    #[arg(long, global = true)]
    quick: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the builders' game once and write the equilibrium.
    Solve,
    /// Solve across a parameter grid and write a long-format CSV.
    Sweep,
    /// Run stake-share simulations and write aggregate statistics.
    Simulate,
    /// Run check suites and write pass/fail reports.
    Verify {
        /// Reference-table reproduction checks.
        #[arg(long)]
        tables: bool,
        /// Auction-game and equilibrium property checks.
        #[arg(long)]
        properties: bool,
        /// Stake-dynamics property checks.
        #[arg(long)]
        stakes: bool,
        /// All suites (default when no suite flag is given).
        #[arg(long)]
        all: bool,
        /// Self-test: inject a failing check to exercise the exit path.
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
}

const DEFAULT_SEED: u64 = 1;

fn main() {
    let code = match run() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.is::<ConfigError>() {
                2
            } else {
                1
            }
        }
    };
    std::process::exit(code);
}

fn run() -> anyhow::Result<i32> {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    }

    let config_text = match &cli.config {
        Some(path) => Some(std::fs::read_to_string(path).map_err(|e| {
            ConfigError(format!("cannot read config {}: {e}", path.display()))
        })?),
        None => None,
    };
    let run_config = match &config_text {
        Some(text) => config::parse(text)?,
        None => config::RunConfig::default(),
    };
    let seed = cli.seed.or(run_config.seed).unwrap_or(DEFAULT_SEED);
    let out_dir = cli
        .out
        .clone()
        .or_else(|| run_config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    let meta = output::Meta::new(config_text.as_deref(), seed);

    match cli.command {
        Command::Solve => commands::solve(&run_config, &meta, &out_dir),
        Command::Sweep => commands::sweep(&run_config, &meta, &out_dir),
        Command::Simulate => commands::simulate(&run_config, &meta, &out_dir, seed),
        Command::Verify { tables, properties, stakes, all, inject_fault } => {
            let none_selected = !(tables || properties || stakes);
            commands::verify(
                &meta,
                &out_dir,
                seed,
                cli.quick,
                commands::VerifySelection {
                    tables: tables || all || none_selected,
                    properties: properties || all || none_selected,
                    stakes: stakes || all || none_selected,
                    inject_fault,
                },
            )
        }
    }
}

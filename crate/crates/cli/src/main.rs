//! `kle-logistic`: densities, moments and truncation errors of the random
//! logistic model, written as CSV.

mod commands;
mod config;
mod output;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use config::Overrides;
use output::Artifacts;

#[derive(Debug, Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration (a previous run's manifest works too).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Built-in setup: example1, example2 or example3.
    #[arg(long, global = true)]
    preset: Option<String>,

    /// Truncation orders, comma separated.
    #[arg(long = "N", global = true, value_delimiter = ',')]
    n: Option<Vec<usize>>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Monte Carlo seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Tensor quadrature order: one value, or one per truncation order.
    #[arg(long = "quad-order", global = true, value_delimiter = ',')]
    quad_order: Option<Vec<usize>>,

    /// Worker threads (0 lets the runtime decide).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Eigenvalues and frequencies of the covariance expansion.
    Spectrum,
    /// Density curves, one file per truncation order.
    Pdf,
    /// Mean and variance over time.
    Moments,
    /// Truncation error tables.
    Errors,
    /// Histogram and moment comparison against sampled solutions.
    McCheck,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Pdf => "pdf",
            Command::Moments => "moments",
            Command::Errors => "errors",
            Command::McCheck => "mc-check",
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    let flags = Overrides {
        preset: cli.preset,
        n: cli.n,
        out: cli.out,
        seed: cli.seed,
        quad_order: cli.quad_order,
        threads: cli.threads,
    };
    let cfg = config::resolve(cli.config.as_deref(), &flags)?;
    if cfg.run.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.run.threads)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let mut out = Artifacts::new(&cfg.out)?;
    let pass = match cli.command {
        Command::Spectrum => commands::spectrum(&cfg, &mut out).map(|_| true),
        Command::Pdf => commands::pdf(&cfg, &mut out).map(|_| true),
        Command::Moments => commands::moments(&cfg, &mut out).map(|_| true),
        Command::Errors => commands::errors(&cfg, &mut out).map(|_| true),
        Command::McCheck => commands::mc_check(&cfg, &mut out),
    }?;
    let manifest = out.write_manifest(cli.command.name(), &cfg)?;
    log::info!("manifest {}", manifest.display());
    Ok(pass)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("Monte Carlo check failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

//! Library side of the `sns` command-line driver.

pub mod commands;
pub mod config;

use std::path::{Path, PathBuf};

use anyhow::{bail, Result};
use clap::{Parser, Subcommand};

use crate::commands::{error_code, Outcome};
use crate::config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "sns", version, about = "Stochastic Navier-Stokes on the sphere")]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (default: `output.dir` from the config).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads. Changes speed only, never results.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Treat warnings as errors.
    #[arg(long, global = true)]
    pub strict: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the identity checks and write verify.json.
    Verify,
    /// Integrate one trajectory; writes diagnostics.csv and a checkpoint.
    Simulate,
    /// Pullback ensemble, absorbing radii and the optional absorption check.
    Pullback,
    /// Sample the invariant measure; writes measure.json.
    Measure,
    /// Per-degree spectrum of a checkpoint; writes spectrum.csv.
    Spectrum {
        /// Checkpoint directory (default: `<out>/checkpoint`).
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
}

/// Built-in configuration used when `--config` is absent.
pub const DEFAULT_CONFIG: &str = include_str!("../../../configs/default.toml");

fn load(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::from_toml(DEFAULT_CONFIG)?,
    };
    if let Some(seed) = cli.seed {
        cfg = cfg.with_seed(seed);
    }
    for w in cfg.model.noise.warnings() {
        if cli.strict {
            bail!("{w}");
        }
        eprintln!("warning: {w}");
    }
    Ok(cfg)
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    let cfg = load(cli)?;
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    let out: &Path = &out;
    sns_core::par::with_threads(cli.threads, || match &cli.command {
        Command::Verify => commands::verify(&cfg, out),
        Command::Simulate => commands::simulate(&cfg, out),
        Command::Pullback => commands::pullback(&cfg, out),
        Command::Measure => commands::measure(&cfg, out),
        Command::Spectrum { checkpoint } => commands::spectrum(&cfg, out, checkpoint.as_deref()),
    })
}

/// Runs the command and returns the process exit code: 0 success, 1 check
/// failure, 2 configuration or I/O error, 3 numerical blowup.
pub fn run(cli: &Cli) -> i32 {
    match dispatch(cli) {
        Ok(Outcome::Ok(s)) => {
            println!("{s}");
            0
        }
        Ok(Outcome::Failed(s)) => {
            println!("{s}");
            1
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            error_code(&e)
        }
    }
}

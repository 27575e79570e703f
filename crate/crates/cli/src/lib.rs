//! Command-line front end: configuration, subcommands and output files.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{ArgAction, Parser, Subcommand};

pub use commands::Outcome;
pub use config::RunConfig;
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "nonext-bec",
    version,
    about = "Finite-volume grand-canonical Bose gases and their thermodynamic limit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, created if needed.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads; overrides the configuration.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Accepted for symmetry with stochastic tools; every computation here is deterministic.
    #[arg(long, global = true, action = ArgAction::SetTrue)]
    pub seedless: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Finite-volume and limiting pressures over sides and chemical potentials.
    Pressure,
    /// Density-constrained finite-size scaling and classification.
    Sweep,
    /// Inequality audits over a grid of state points.
    Audit,
    /// Transfer engine against exhaustive enumeration on toy systems.
    OracleCheck,
    /// Thermodynamic-limit quantities on a grid.
    Limits,
    /// Momentum shells of a box.
    Modes,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Pressure => "pressure",
            Command::Sweep => "sweep",
            Command::Audit => "audit",
            Command::OracleCheck => "oracle-check",
            Command::Limits => "limits",
            Command::Modes => "modes",
        }
    }
}

/// Loads the configuration, sets up a local thread pool and runs one command.
pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::Config("--config is required".into()))?;
    let cfg = RunConfig::load(path)?;
    let threads = match cli.threads.or(cfg.threads) {
        Some(0) => return Err(CliError::Config("--threads must be at least 1".into())),
        Some(n) => n,
        None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    };
    output::ensure_dir(&cli.out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Resource(format!("thread pool: {e}")))?;
    log::info!("{} with {threads} threads, config {}", cli.command.name(), cfg.hash());
    let out = cli.out.as_path();
    pool.install(|| match cli.command {
        Command::Pressure => commands::pressure(&cfg, out),
        Command::Sweep => commands::sweep(&cfg, out),
        Command::Audit => commands::audit(&cfg, out),
        Command::OracleCheck => commands::oracle(&cfg, out),
        Command::Limits => commands::limits(&cfg, out),
        Command::Modes => commands::modes(&cfg, out),
    })
}

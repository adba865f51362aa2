//! `evequiv` command-line interface.
//!
//! Every subcommand reads one JSON config and writes CSV or JSON artifacts
//! into the output directory. Exit status: 0 on success, 2 for a bad config
//! or input, 3 when a numerical routine or calibration fails.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "evequiv", version, about = "E-values for equivalence testing")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Overrides the seed in the config (campaign and Monte Carlo sweeps).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// E-curves and equivalence curves over symmetric margins.
    Curve,
    /// Calibrate a utility-optimal boundary mixture.
    Calibrate,
    /// Null expectations over a parameter grid.
    Validity,
    /// Tightest margin pairs reaching a level.
    Frontier,
    /// Combine two e-curves.
    Merge,
    /// Monte Carlo campaign for sequential e-processes.
    Campaign,
    /// Minimax decisions from curves and margins.
    Decide,
    /// Strict total positivity of a discrete kernel.
    StpCheck,
}

/// Errors reported by the CLI, with their exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] evequiv::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use evequiv::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) => match e {
                E::Calibration(_) | E::Numeric(_) | E::DegenerateSample(_) | E::AmbiguousDecision(_) => 3,
                E::Domain(_) | E::Parameter(_) | E::Config(_) | E::Io(_) | E::Json(_) | E::Csv(_) => 2,
            },
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

pub struct Context {
    pub config: PathBuf,
    pub out: PathBuf,
    pub format: Format,
    pub seed: Option<u64>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let config = cli
        .config
        .ok_or_else(|| CliError::Config("--config is required".into()))?;
    std::fs::create_dir_all(&cli.out)?;
    let ctx = Context {
        config,
        out: cli.out,
        format: cli.format,
        seed: cli.seed,
    };
    match cli.command {
        Command::Curve => commands::curve(&ctx),
        Command::Calibrate => commands::calibrate(&ctx),
        Command::Validity => commands::validity(&ctx),
        Command::Frontier => commands::frontier(&ctx),
        Command::Merge => commands::merge(&ctx),
        Command::Campaign => commands::campaign(&ctx),
        Command::Decide => commands::decide(&ctx),
        Command::StpCheck => commands::stp_check(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

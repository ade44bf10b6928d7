//! Batch front end for `musielak-core`.
//!
//! Every subcommand reads one TOML configuration (see `docs/config.md`),
//! prints a report and writes CSV files to the output directory.
//! Exit codes: 0 pass, 1 property violation, 2 configuration error,
//! 3 solver non-convergence.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod expr;
pub mod output;

use std::fmt;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{ConfigError, RunConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Invariants, Fenchel–Young, biconjugation and closed-form checks of M.
    CheckNfunction,
    /// Sampling falsifier for the balance condition.
    CheckBalance,
    /// Structural assumptions on (A, Φ, b, F) with fitted constants.
    ValidateProblem,
    /// One Galerkin solve with lemma diagnostics.
    Solve,
    /// Convergence study over the configured resolutions.
    Converge,
    /// Two solves from different starts and the Heaviside-test integrals.
    UniqueProbe,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::CheckNfunction => "check-nfunction",
            Command::CheckBalance => "check-balance",
            Command::ValidateProblem => "validate-problem",
            Command::Solve => "solve",
            Command::Converge => "converge",
            Command::UniqueProbe => "unique-probe",
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "musielak",
    version,
    about = "Galerkin solver and N-function checks in Musielak–Orlicz spaces"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Configuration file (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory for CSV files; overrides `out` in the configuration.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for all sampling; overrides `seed` in the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Suppress the report on standard output.
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Pass = 0,
    Violation = 1,
    ConfigError = 2,
    NotConverged = 3,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Io { path: PathBuf, source: std::io::Error },
    Report(std::io::Error),
    Core(musielak_core::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "configuration error: {e}"),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            CliError::Report(e) => write!(f, "writing report: {e}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<musielak_core::Error> for CliError {
    fn from(e: musielak_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn status(&self) -> ExitStatus {
        use musielak_core::Error as E;
        match self {
            CliError::Config(_) | CliError::Io { .. } | CliError::Report(_) => ExitStatus::ConfigError,
            CliError::Core(E::NotConverged { .. }) => ExitStatus::NotConverged,
            CliError::Core(
                E::InvalidParameter { .. }
                | E::DimensionMismatch { .. }
                | E::UnsupportedDomain(_)
                | E::DomainViolation { .. },
            ) => ExitStatus::ConfigError,
            CliError::Core(_) => ExitStatus::Violation,
        }
    }
}

/// Resolved options of one run.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub quiet: bool,
}

/// Runs one subcommand, writing the report to `report`.
pub fn execute(command: Command, options: &RunOptions, report: &mut dyn Write) -> Result<ExitStatus, CliError> {
    let config = RunConfig::load(&options.config)?;
    let seed = options.seed.or(config.seed).unwrap_or(0);
    let out = options
        .out
        .clone()
        .or_else(|| config.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let ctx = commands::Context {
        config: &config,
        seed,
        out: &out,
    };
    let mut sink: Box<dyn Write + '_> = if options.quiet {
        Box::new(std::io::sink())
    } else {
        Box::new(report)
    };
    let report = sink.as_mut();
    match command {
        Command::CheckNfunction => commands::check_nfunction(&ctx, report),
        Command::CheckBalance => commands::check_balance(&ctx, report),
        Command::ValidateProblem => commands::validate_problem(&ctx, report),
        Command::Solve => commands::solve(&ctx, report),
        Command::Converge => commands::converge(&ctx, report),
        Command::UniqueProbe => commands::unique_probe(&ctx, report),
    }
}

/// Entry point of the binary; returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let Some(config) = cli.config.clone() else {
        eprintln!("error: --config <path> is required");
        return ExitStatus::ConfigError.code();
    };
    let options = RunOptions {
        config,
        out: cli.out.clone(),
        seed: cli.seed,
        quiet: cli.quiet,
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match execute(cli.command, &options, &mut lock) {
        Ok(status) => status.code(),
        Err(e) => {
            eprintln!("{} failed: {e}", cli.command.name());
            e.status().code()
        }
    }
}

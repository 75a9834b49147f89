//! Command-line front end.
//!
//! Each subcommand reads an optional JSON configuration (defaults reproduce
//! the reference experiment), applies the command-line overrides, validates
//! everything before any work starts and writes its results atomically under
//! `--out`. Outputs depend only on the resolved configuration and the seed.
//!
//! Exit codes: 0 on success, 1 for an invalid configuration or I/O failure,
//! 2 when a solver does not converge.

mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use thiserror::Error;

pub use output::{num, read_csv, Header, VERSION};

#[derive(Debug, Parser)]
#[command(name = "qcontrol", version, about = "Hybrid, filtered and coherent control of a two-level atom")]
pub struct Cli {
    /// JSON configuration; omitted fields take their defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed of all random streams.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Override the integration step.
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    /// Override the number of Monte Carlo paths.
    #[arg(long, global = true)]
    pub paths: Option<usize>,
    /// Override the stationary solver tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Also write dynamic-programming residuals.
    #[arg(long, global = true)]
    pub residual_report: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Hybrid trajectory under impulses; writes simulate.csv.
    Simulate,
    /// One filtered measurement path; writes filter.csv.
    Filter,
    /// Ensemble means of the filter; writes montecarlo.csv.
    Montecarlo,
    /// Dynamic-programming solvers.
    Hjb {
        #[command(subcommand)]
        problem: HjbCommand,
    },
    /// Network algebra and master equations.
    Network {
        #[command(subcommand)]
        op: NetworkCommand,
    },
    /// Coherent-feedback CNOT transfer; prints the report.
    CnotDemo,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum HjbCommand {
    TimeOptimal,
    Qvi,
    RiskNeutral,
    RiskSensitive,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum NetworkCommand {
    /// Cascade the systems in order.
    Series,
    /// Place the systems side by side.
    Concat,
    /// Integrate the master equation of one system.
    Master,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("solver did not converge: {0}")]
    Solver(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Solver(_) => 2,
        }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        match e {
            crate::Error::NoConvergence { .. } => CliError::Solver(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

/// What a successful run produced.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    /// Text for standard output, if the command prints a report.
    pub stdout: Option<String>,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code. Messages go to standard output and error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(summary) => {
            if let Some(text) = summary.stdout {
                println!("{text}");
            }
            for f in &summary.files {
                eprintln!("wrote {}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed command.
pub fn execute(cli: &Cli) -> Result<RunSummary, CliError> {
    match cli.command {
        Command::Simulate => commands::simulate(cli),
        Command::Filter => commands::filter(cli),
        Command::Montecarlo => commands::montecarlo(cli),
        Command::Hjb { problem } => match problem {
            HjbCommand::TimeOptimal => commands::time_optimal(cli),
            HjbCommand::Qvi => commands::qvi(cli),
            HjbCommand::RiskNeutral => commands::risk_neutral(cli),
            HjbCommand::RiskSensitive => commands::risk_sensitive(cli),
        },
        Command::Network { op } => commands::network(cli, op),
        Command::CnotDemo => commands::cnot_demo(cli),
    }
}

/// Reads a configuration, naming the offending field on failure. Without a
/// path the defaults are used.
pub fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, CliError> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        CliError::Config(format!("field `{field}`: {}", e.inner()))
    })
}

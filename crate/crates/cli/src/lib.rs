//! Library side of the `grasswalk` binary: command implementations,
//! config handling, trace serialization, and manifests.

pub mod commands;
pub mod config;
pub mod io;
pub mod manifest;
pub mod trace;

use clap::Args;
use std::path::PathBuf;

#[derive(Debug)]
pub enum CliError {
    /// Invalid configuration: exit code 2.
    Config(String),
    /// Failure while running: exit code 1.
    Runtime(String),
    /// A verified bound was violated: exit code 1 after reports are written.
    BoundViolated(String),
}

impl From<grasswalk::Error> for CliError {
    fn from(e: grasswalk::Error) -> Self {
        match e {
            grasswalk::Error::InvalidDimension { .. }
            | grasswalk::Error::InvalidArgument(_)
            | grasswalk::Error::DimensionMismatch { .. } => CliError::Config(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Flags shared by every subcommand.
#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Master seed; fully determines all outputs.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker thread cap (default: GRASSWALK_THREADS, else all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output path (reports/traces; a manifest is written next to it).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// TOML config file; explicit flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Include iterate coordinates in trace records.
    #[arg(long, global = true, default_value_t = false)]
    pub emit_iterates: bool,
}


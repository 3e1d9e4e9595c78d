use std::path::PathBuf;

use induced_sdr::SdrError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: line {line}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        column: String,
        message: String,
    },
    #[error("too few rows: n = {n} must exceed p + 1 = {}", .p + 1)]
    TooFewRows { n: usize, p: usize },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Compute(#[from] SdrError),
}

impl CliError {
    /// 1 for failures during computation or output, 2 for bad input or usage.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Compute(SdrError::Config(_)) => 2,
            CliError::Compute(_) | CliError::Write { .. } => 1,
            _ => 2,
        }
    }

    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Read { .. } => "read",
            CliError::Parse { .. } => "parse",
            CliError::TooFewRows { .. } => "too_few_rows",
            CliError::Config(_) => "config",
            CliError::Write { .. } => "write",
            CliError::Compute(_) => "computation",
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

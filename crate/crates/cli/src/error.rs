//! Command errors classified by exit code.

use std::fmt;

/// What went wrong, grouped by who has to fix it: the config file (exit 2),
/// the input data or filesystem (exit 3), or the numbers themselves (exit 4).
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Data(msg) => write!(f, "data error: {msg}"),
            CliError::Numeric(msg) => write!(f, "numerical failure: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

pub type Result<T> = std::result::Result<T, CliError>;

/// Classify a core error raised while processing data: non-finite numbers
/// are numerical failures, everything else is a data problem.
pub fn data_err(e: sfr_core::Error) -> CliError {
    match e {
        sfr_core::Error::Divergence { .. } | sfr_core::Error::NonFinite { .. } => {
            CliError::Numeric(e.to_string())
        }
        other => CliError::Data(other.to_string()),
    }
}

/// Classify a core error raised while interpreting config values.
pub fn config_err(e: sfr_core::Error) -> CliError {
    CliError::Config(e.to_string())
}

/// An I/O failure talking to `path`.
pub fn io_err(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

use std::fmt;

use torus_mhd::MhdError;

use crate::config::ConfigError;

/// Failures of a subcommand, each with its process exit code.
#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    /// Stability or vacuum failure during a run.
    Numerical(MhdError),
    /// The audit found values that differ from the CSV.
    AuditMismatch { count: usize },
    /// I/O, file-format and other errors.
    Other(MhdError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::AuditMismatch { .. } => 4,
            CliError::Other(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "config error: {e}"),
            CliError::Numerical(e) => write!(f, "numerical failure: {e}"),
            CliError::AuditMismatch { count } => write!(f, "audit found {count} mismatches"),
            CliError::Other(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<MhdError> for CliError {
    fn from(e: MhdError) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e)
        } else {
            CliError::Other(e)
        }
    }
}

//! Library side of the `torus-mhd` command-line tool, shared with the
//! acceptance harness.

pub mod commands;
pub mod config;
mod error;

pub use config::{ConfigError, RunConfig, TimeStep};
pub use error::CliError;

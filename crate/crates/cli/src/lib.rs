//! Library half of the `opo-squeeze` command-line tool. The binary only
//! parses arguments and maps errors to exit codes; everything else lives
//! here so it can be tested in-process.

pub mod commands;
pub mod config;
pub mod dataset;
pub mod fmt;

use thiserror::Error;

pub use commands::{run, Cli};

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input: malformed config, out-of-range field, bad flag combination.
    #[error("invalid {path}: {message}")]
    Validation { path: String, message: String },
    /// A fit or a dark-noise correction has no physical solution.
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("oracle disagrees with the closed-form spectrum: {0}")]
    OracleAssertion(String),
    #[error("{failed} reproduction check(s) failed")]
    CheckFailed { failed: usize },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation { .. } => 2,
            CliError::Infeasible(_) => 3,
            CliError::OracleAssertion(_) => 4,
            CliError::CheckFailed { .. } | CliError::Io { .. } => 1,
        }
    }

    pub(crate) fn invalid(path: &str, message: impl Into<String>) -> Self {
        CliError::Validation {
            path: path.to_string(),
            message: message.into(),
        }
    }
}

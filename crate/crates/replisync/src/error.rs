use std::path::PathBuf;
use std::process::ExitCode;

use thiserror::Error;

/// Failures surfaced by the command-line tool, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, unreadable or invalid configuration or input.
    #[error("{0}")]
    Config(String),
    /// A self-check or replay check did not pass.
    #[error("{0}")]
    Check(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    /// A session could not be played with the given inputs.
    #[error("simulation failed: {0}")]
    Run(String),
}

impl CliError {
    pub fn config(msg: impl std::fmt::Display) -> Self {
        CliError::Config(msg.to_string())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// 1 for failed checks, 2 for usage and configuration problems.
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Check(_) => ExitCode::from(1),
            CliError::Config(_) | CliError::Io { .. } | CliError::Run(_) => ExitCode::from(2),
        }
    }
}

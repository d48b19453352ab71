use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("solver failed: {0}")]
    Solver(#[source] schwarz_core::Error),
    #[error("reference solve failed: {0}")]
    Reference(#[source] schwarz_core::Error),
    #[error("cannot write output: {0}")]
    Output(String),
}

impl CliError {
    /// Process exit status for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Solver(_) | CliError::Output(_) => 3,
            CliError::Reference(_) => 4,
        }
    }
}

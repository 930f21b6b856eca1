use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{key}: {message}")]
    Config { key: String, message: String },
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Format { path: String, message: String },
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Core(#[from] occmfg::Error),
}

/// Machine-readable form written to stderr.
#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub error: &'static str,
    pub message: String,
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config { .. } => "config",
            CliError::Usage(_) => "usage",
            CliError::Format { .. } => "format",
            CliError::Io(_) => "io",
            CliError::Core(occmfg::Error::Solver(_)) | CliError::Core(occmfg::Error::NoConvergedRun { .. }) => "solver",
            CliError::Core(occmfg::Error::Infeasible { .. }) => "infeasible",
            CliError::Core(_) => "model",
        }
    }

    pub fn report(&self) -> ErrorReport {
        ErrorReport {
            error: self.kind(),
            message: self.to_string(),
        }
    }
}

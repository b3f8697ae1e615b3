use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("certification failed: {0}")]
    Certification(String),

    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Config(_) | CliError::Parse(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Certification(_) => 4,
            CliError::Io { .. } => 1,
        })
    }
}

impl From<pinchopt::Error> for CliError {
    fn from(e: pinchopt::Error) -> Self {
        match e {
            pinchopt::Error::Infeasible(msg) => CliError::Infeasible(msg),
            other => CliError::Config(other.to_string()),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

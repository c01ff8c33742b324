use std::path::{Path, PathBuf};
use std::process::ExitCode;

use radiant_bridge::BridgeError;
use radiant_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("missing {what}: {}", path.display())]
    Missing { what: &'static str, path: PathBuf },
    #[error("divergence: {0}")]
    Divergence(String),
    #[error("remote failure: {0}")]
    Remote(String),
}

impl CliError {
    pub fn missing(what: &'static str, path: &Path) -> Self {
        CliError::Missing {
            what,
            path: path.to_path_buf(),
        }
    }

    /// Prefixes the message, keeping the exit class.
    pub fn with_context(self, context: &str) -> Self {
        match self {
            CliError::Input(m) => CliError::Input(format!("{context}: {m}")),
            CliError::Divergence(m) => CliError::Divergence(format!("{context}: {m}")),
            CliError::Remote(m) => CliError::Remote(format!("{context}: {m}")),
            missing => missing,
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Input(_) | CliError::Missing { .. } => 2,
            CliError::Divergence(_) => 3,
            CliError::Remote(_) => 4,
        })
    }
}

fn root_cause(e: &CoreError) -> &CoreError {
    match e {
        CoreError::ViewFailed { source, .. } => root_cause(source),
        other => other,
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match root_cause(&e) {
            CoreError::Divergence(_) => CliError::Divergence(e.to_string()),
            CoreError::Remote(_) => CliError::Remote(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<BridgeError> for CliError {
    fn from(e: BridgeError) -> Self {
        match e {
            BridgeError::Core(inner) => inner.into(),
            BridgeError::InvalidEndpoint(_) => CliError::Input(e.to_string()),
            other => CliError::Remote(other.to_string()),
        }
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;

use std::path::Path;

use mvcca::MvccaError;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Failure of a harness invocation, split by exit status.
///
/// Bad flags, unreadable or malformed files and inconsistent dimensions are
/// usage errors; failures inside a fit or projection that come from the
/// numbers themselves are numerical errors.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }

    pub(crate) fn file(path: &Path, what: impl std::fmt::Display) -> Self {
        CliError::Usage(format!("{}: {what}", path.display()))
    }
}

impl From<MvccaError> for CliError {
    fn from(e: MvccaError) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

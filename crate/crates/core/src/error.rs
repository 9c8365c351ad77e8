use thiserror::Error;

/// Errors raised by fitting, projection and density evaluation.
///
/// Variants split into two families: structural problems with the inputs
/// (mismatched shapes, bad arguments) and numerical failures (matrices that
/// stay indefinite or singular after jitter, non-finite objectives).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MvccaError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{what} is not positive definite after jitter")]
    NotPositiveDefinite { what: String },

    #[error("{what} is numerically singular (condition estimate {condition:.3e} exceeds {limit:.3e})")]
    Singular {
        what: String,
        condition: f64,
        limit: f64,
    },

    #[error("non-finite {what} at iteration {iteration}")]
    NonFinite { what: String, iteration: usize },
}

impl MvccaError {
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            MvccaError::NotPositiveDefinite { .. }
                | MvccaError::Singular { .. }
                | MvccaError::NonFinite { .. }
        )
    }

    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        MvccaError::Dimension(msg.into())
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        MvccaError::InvalidArgument(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, MvccaError>;

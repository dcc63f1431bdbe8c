use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum LpepError {
    /// Caller passed arguments that violate a precondition (dimension mismatch, bad range).
    #[error("argument error: {0}")]
    Argument(String),

    /// A linear-algebra step failed (singular information matrix, failed Cholesky).
    #[error("numeric error: {0}")]
    Numeric(String),

    /// The run cannot be configured as requested.
    #[error("configuration error: {0}")]
    Config(String),

    /// Malformed input data, with location context when known.
    #[error("data error: {0}")]
    Data(String),

    /// The chain hit more failed iterations than the allowed budget.
    #[error("numeric failure budget exceeded: {failures} of {iterations} iterations failed")]
    FailureBudget { failures: usize, iterations: usize },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, LpepError>;

pub(crate) fn arg_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(LpepError::Argument(msg.into()))
}

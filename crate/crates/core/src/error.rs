use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LoqcError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Probability mass discarded by truncation or pruning exceeds what the
    /// caller is willing to accept.
    #[error("truncation bound {bound:e} exceeds the allowed {limit:e}")]
    Precision { bound: f64, limit: f64 },
}

pub type Result<T> = std::result::Result<T, LoqcError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(LoqcError::InvalidArgument(msg.into()))
}

use thiserror::Error;

/// Errors raised by the toolkit. The CLI maps each variant onto an exit code.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed configuration, grid or catalog request.
    #[error("configuration error: {0}")]
    Config(String),
    /// A caller broke an operation's preconditions (dimension mismatch, non-rotation input, ...).
    #[error("contract violation: {0}")]
    Contract(String),
    /// A checked invariant failed.
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
    /// A quotient with zero denominator and nonzero numerator; indicates a numerics bug.
    #[error("infeasible report: {0}")]
    Infeasible(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

pub(crate) fn contract<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Contract(msg.into()))
}

use thiserror::Error;

/// Errors raised by the simulation and estimation operations.
#[derive(Debug, Error)]
pub enum Error {
    /// A constructor or operation was handed parameters that violate its
    /// preconditions (non-decreasing spike values, `m >= p`, mismatched
    /// lengths, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An input lies outside the mathematical domain of an operation
    /// (`φ` at zero, an undetectable spike in a variance formula, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A value that must lie strictly above the Marčenko–Pastur bulk edge
    /// does not.
    #[error("out of range: {0}")]
    OutOfRange(String),

    /// Numerical validation of an input matrix or spectrum failed.
    #[error("validation error: {0}")]
    Validation(String),

    /// A prior over `k`-tuples has no support.
    #[error("empty prior: {k} spikes requested from a support of size {support}")]
    EmptyPrior { k: usize, support: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("indeterminate Bessel ratio: {0}")]
    IndeterminateRatio(String),

    /// A signed log-sum-exp cancelled to zero or went negative where a
    /// positive quantity was required.
    #[error("cancellation: signed sum is not positive")]
    Cancellation,

    #[error("optimisation failed: {0}")]
    Optimisation(String),

    /// The stationarity condition for the optimal order has no sign change
    /// on the search interval.
    #[error("no root of the order condition on (1, {alpha_max}]")]
    NoRoot { alpha_max: f64 },

    #[error("malformed channel: {0}")]
    MalformedChannel(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("empty batch")]
    EmptyBatch,

    #[error("zero vector cannot be normalised")]
    ZeroVector,

    #[error("invalid mean direction: norm {0} is not 1")]
    InvalidMean(f64),
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

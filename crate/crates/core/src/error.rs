use thiserror::Error;

/// Errors raised by the bound computations and their inputs.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// A bound was requested outside the region where it is valid. The caller
    /// is expected to fall back to another method.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("index {index} out of range 1..={len}")]
    Index { index: usize, len: usize },

    #[error("quadrature did not converge (partial estimate {estimate:e}, error estimate {error:e})")]
    Convergence { estimate: f64, error: f64 },

    #[error("exact integration supports at most 3 transmissions, got {0}")]
    UnsupportedTransmissions(usize),

    /// The scheme never terminates: the probability that every attempt fails is one.
    #[error("degenerate scheme: probability that all {0} attempts fail is 1")]
    DegenerateScheme(usize),

    #[error("invalid config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

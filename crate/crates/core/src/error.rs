use thiserror::Error;

/// Errors raised by model construction, evaluation and sampling.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid distribution spec: {0}")]
    InvalidSpec(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("problem too large: {0}")]
    TooLarge(String),

    #[error("invalid Lévy measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A broken internal invariant, e.g. a first-passage bracket that does
    /// not straddle zero.
    #[error("internal logic error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

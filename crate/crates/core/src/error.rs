use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("unsupported dimension {0} (supported system sizes are at most 8)")]
    UnsupportedDimension(usize),

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid angle: {0}")]
    InvalidAngle(String),

    #[error("channel annihilates the input (trace {0:e})")]
    VanishingNormalization(f64),

    #[error("map is not completely positive (min Choi eigenvalue {0:e})")]
    NotCompletelyPositive(f64),

    #[error("channel is not trace preserving (deviation {0:e})")]
    NotTracePreserving(f64),

    #[error("channel increases trace (max eigenvalue of sum A^dag A - I is {0:e})")]
    TraceIncreasing(f64),

    #[error("invalid teleportation scheme: {0}")]
    InvalidScheme(String),

    #[error("invalid outcome index {index} (scheme has {count} outcomes)")]
    InvalidOutcome { index: usize, count: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

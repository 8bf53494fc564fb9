use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty request: {0}")]
    EmptyRequest(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index error: {0}")]
    Index(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("series diverges: {0}")]
    Divergent(String),

    #[error("correlation matrix is not positive semidefinite (pivot {index} failed)")]
    NotPsd { index: usize },

    #[error("upper endpoint violated: y0 = {y0} but max sample value is {max}")]
    EndpointViolation { y0: f64, max: f64 },

    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),

    #[error("insufficient replications: got {got}, need at least {need}")]
    InsufficientReplications { got: u64, need: u64 },

    #[error("unknown experiment id: {0}")]
    UnknownExperiment(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

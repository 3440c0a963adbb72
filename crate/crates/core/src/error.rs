use thiserror::Error;

/// Errors produced by the optimization pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("kernel matrix is not positive definite even with jitter {jitter:e}")]
    SingularKernel { jitter: f64 },

    #[error("degenerate frame: ideal and nadir coincide in every objective")]
    DegenerateFrame,

    #[error("point outside the box domain at coordinate {index}: {value}")]
    OutOfBounds { index: usize, value: f64 },

    #[error("subproblem solve failed: {0}")]
    SolveFailed(String),

    #[error("empty candidate pool")]
    EmptyPool,

    #[error("unknown problem '{0}'")]
    UnknownProblem(String),

    #[error("problem '{0}' has no closed form in this crate")]
    UnsupportedProblem(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

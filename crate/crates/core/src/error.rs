use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PidmdError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("empty input")]
    EmptyInput,

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("insufficient snapshots: need at least {needed}, got {got}")]
    InsufficientSnapshots { needed: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("system size {n} exceeds the dense limit {limit}; pass the override flag to proceed")]
    SizeLimitExceeded { n: usize, limit: usize },

    #[error("resolvent is near-singular at omega = {omega}: eigenvalue {eigenvalue} lies within {distance:e} of i*omega")]
    NearSingularResolvent {
        omega: f64,
        eigenvalue: Complex64,
        distance: f64,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("serialization error: {0}")]
    Serialization(String),
}

impl PidmdError {
    /// True for failures caused by the data or the numerics rather than by how the call was made.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            PidmdError::DegenerateInput(_)
                | PidmdError::NearSingularResolvent { .. }
                | PidmdError::Numerical(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, PidmdError>;

pub(crate) fn invalid(msg: impl Into<String>) -> PidmdError {
    PidmdError::InvalidArgument(msg.into())
}

pub(crate) fn mismatch(msg: impl Into<String>) -> PidmdError {
    PidmdError::DimensionMismatch(msg.into())
}

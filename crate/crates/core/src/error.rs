use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("total dimension {dim} exceeds the configured cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("trace is not 1 (got {0})")]
    InvalidTrace(f64),

    #[error("state vector is not normalized (norm^2 = {0})")]
    NotNormalized(f64),

    #[error("invalid system shape: {0}")]
    InvalidShape(String),

    #[error("Kraus operators are not trace preserving (deviation norm {0:e})")]
    Completeness(f64),

    #[error("channel is not CPTP: {what} (deviation {deviation:e})")]
    NotCptp { what: &'static str, deviation: f64 },

    #[error("classical table row (x={x}, e={e}) sums to {sum}")]
    InvalidTable { x: usize, e: usize, sum: f64 },

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("epsilon must lie in (0,1), got {0}")]
    InvalidEpsilon(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("instance exceeds enumeration caps: {0}")]
    CapExceeded(String),

    #[error("error-operator reconstruction residual {0:e} exceeds 1e-9")]
    Reconstruction(f64),

    #[error("linear program is {0}")]
    Lp(&'static str),

    #[error("malformed data: {0}")]
    Schema(String),
}

pub type Result<T> = std::result::Result<T, Error>;

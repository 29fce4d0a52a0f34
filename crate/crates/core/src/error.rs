use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("tensor pair shapes differ: ({0}, {1}) vs ({2}, {3})")]
    ShapeMismatch(usize, usize, usize, usize),
    #[error("invalid index set: {0}")]
    InvalidIndexSet(String),
    #[error("invalid tensor: {0}")]
    InvalidTensor(String),
    #[error("degree {degree} exceeds the available moment degree {available}")]
    DegreeOverflow { degree: usize, available: usize },
    #[error("relaxation order {k} is too small for polynomial degree {degree}")]
    OrderTooSmall { k: usize, degree: usize },
    #[error("relaxation order cap {k_max} reached without flat truncation")]
    OrderCapReached { k_max: usize },
    #[error("semidefinite solver failed: {0}")]
    NumericalFailure(String),
    #[error("shift underflow while probing the gap after {previous}")]
    DeltaUnderflow { previous: f64 },
    #[error("level cap {0} exceeded")]
    LevelCapExceeded(usize),
    #[error("tensor B is not known to be strictly copositive")]
    NotCopositive,
    #[error("instance too large for the brute-force oracle: n = {n}, m = {m}")]
    OracleSizeGuard { n: usize, m: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

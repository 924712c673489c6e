use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FppError {
    #[error("grid size {0} is not a power of two >= 8")]
    BadGridSize(usize),
    #[error("grid mismatch: expected N={expected}, got N={got}")]
    GridMismatch { expected: usize, got: usize },
    #[error("exponent p={0} must be positive")]
    BadExponent(f64),
    #[error("arity mismatch: symbol has d={expected}, got {got} frequencies")]
    ArityMismatch { expected: usize, got: usize },
    #[error("frequency {xi} outside the tabulated range")]
    FrequencyOutOfRange { xi: i64 },
    #[error("bandwidth budget violated: combined bandwidth {total} >= {limit}")]
    Bandwidth { total: i64, limit: i64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("partition too coarse: |atilde|={value} below c0/2={bound}")]
    PartitionTooCoarse { value: f64, bound: f64 },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("postcondition failed: {0}")]
    Postcondition(String),
    #[error("point is not on the hyperplane S (coordinate sum {0})")]
    OffHyperplane(String),
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, FppError>;

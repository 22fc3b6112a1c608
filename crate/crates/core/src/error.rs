use crate::problem::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("value {value} at coordinate {coord} lies outside the grid interval ({m1}, {m2}]")]
    OutOfGrid {
        coord: usize,
        value: f64,
        m1: i64,
        m2: i64,
    },

    #[error("bin {t} outside 1..={bins}")]
    BinOutOfRange { t: usize, bins: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("problem validation failed with {} violation(s); first: {}", .0.len(), .0.first().map(|v| v.to_string()).unwrap_or_default())]
    Validation(Vec<Violation>),

    #[error("coefficients of coordinate {coord} are not quasiconvex (bin {bin} exceeds both sides)")]
    NotQuasiconvex { coord: usize, bin: usize },

    #[error("minimizer at coordinate {coord} is not unique (zero operator entry and no strictly convex penalty)")]
    NonUnique { coord: usize },

    #[error("operator norm estimate {norm} is not below 1")]
    NormGate { norm: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("objective increased at iteration {iter}: {before} -> {after}")]
    Monotonicity { iter: usize, before: f64, after: f64 },

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

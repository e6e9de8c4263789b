//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A scale violates a structural precondition (non-positive interval, empty, ...).
    #[error("invalid scale: {0}")]
    InvalidScale(String),

    /// Harmonicity ratio is not a reduced fraction x/y with x >= y >= 1.
    #[error("invalid ratio {x}/{y}: {reason}")]
    InvalidRatio { x: u32, y: u32, reason: &'static str },

    #[error("division by zero in cost function ({0})")]
    DivisionByZero(String),

    /// Two distribution estimates live on different grids.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A sample has too few points or zero variance for the requested statistic.
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    /// Projected acceptance rate is below the feasibility floor.
    #[error("aborting: projected acceptance {projected:.3e} is below {floor:.0e} after {probed} probe proposals")]
    AbortTooSelective {
        projected: f64,
        floor: f64,
        probed: u64,
    },

    /// Root finding could not bracket or reach the requested target.
    #[error("no solution: {0}")]
    NoSolution(String),

    /// A probability density failed its normalization check.
    #[error("invalid density: {0}")]
    InvalidDensity(String),

    /// Bad argument combination or value (maps to CLI usage errors).
    #[error("invalid input: {0}")]
    Input(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Subspace dimension out of range (`k < 1` or `k > d`).
    #[error("invalid subspace dimension k={k} for ambient dimension d={d}")]
    InvalidDimension { d: usize, k: usize },

    /// An anchored plane was requested for the zero vector.
    #[error("anchored subspace sampling requires a nonzero anchor (norm {norm:e})")]
    ZeroAnchor { norm: f64 },

    /// Vector or matrix dimensions do not match.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// An argument failed validation.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A solver was asked to handle a loss outside its contract.
    #[error("solver cannot handle this loss: {0}")]
    SolverMismatch(String),

    /// Sampled statistics are degenerate (constant values: no defined ratio).
    #[error("degenerate statistics: {0}")]
    DegenerateStatistics(String),
}

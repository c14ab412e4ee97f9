//! Shared error type for the filtering library.

use thiserror::Error;

/// Errors surfaced by filter construction, linear algebra, and the harness.
#[derive(Debug, Error)]
pub enum Error {
    /// Operand shapes are inconsistent for the requested operation.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// An index or index set points outside the addressed object.
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    /// A matrix that must be symmetric is not, beyond tolerance.
    #[error("matrix not symmetric within tolerance: {0}")]
    NotSymmetric(String),

    /// A factorization required positive definiteness and did not find it.
    #[error("matrix not positive definite: {0}")]
    NotPositiveDefinite(String),

    /// A linear solve finished but its residual exceeds the contract bound.
    #[error("linear solve residual too large: {0}")]
    SolveResidual(String),

    /// A configuration value (file, key, or derived quantity) is invalid.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A state became non-finite or otherwise numerically unusable.
    #[error("numerical instability: {0}")]
    Instability(String),

    /// File I/O failed (config reading, CSV writing).
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

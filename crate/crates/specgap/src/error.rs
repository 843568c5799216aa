//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A structural hypothesis on the collision kernel is violated
    /// (e.g. the kinetic lower bound vanishes, or c_b = 0).
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    /// A quadrature rule cannot be built or applied as requested.
    #[error("quadrature error: {0}")]
    Quadrature(String),

    /// A grid is too coarse to resolve a concentrated kernel; the message
    /// carries a resolution hint.
    #[error("resolution error: {0}")]
    Resolution(String),

    /// Linear-algebra failure (non-SPD Gram matrix, failed factorization).
    #[error("linear algebra error: {0}")]
    Linalg(String),

    /// Invalid run configuration.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

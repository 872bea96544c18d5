//! Error type shared by the whole crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum QpdoError {
    #[error("invalid grid parameter: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("support violation: {0}")]
    SupportViolation(String),

    #[error("admissibility violation: {0}")]
    Admissibility(String),

    #[error("compatibility violation: {0}")]
    Compatibility(String),

    #[error("ellipticity violation: {0}")]
    Ellipticity(String),

    #[error("overflow guard: {0}")]
    Overflow(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular assembly: {0}")]
    SingularAssembly(String),

    #[error("ill-conditioned system: {0}")]
    IllConditioned(String),

    #[error("quadrature did not converge: {0}")]
    QuadratureNonConverged(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, QpdoError>;

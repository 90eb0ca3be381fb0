use thiserror::Error;

/// Errors raised by the numerical toolkit.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("coefficient `{coefficient}` is not finite at node {node} (x = {x})")]
    Assembly {
        coefficient: String,
        node: usize,
        x: f64,
    },

    #[error("coefficient `{0}` is not integrable against the oscillator basis; use a grid representation")]
    UnsupportedInBasis(String),

    #[error("metric error: {0}")]
    Metric(String),

    #[error("ill-conditioned eigenbasis: condition {condition:.3e} exceeds {limit:.1e}")]
    Conditioning { condition: f64, limit: f64 },

    #[error("map is singular at node {node} (x = {x})")]
    SingularMap { node: usize, x: f64 },

    /// The QR iteration stopped before all eigenvalues converged. LAPACK reports
    /// the count of trailing eigenvalues that did converge in `converged`.
    #[error("eigensolver failed to converge for a {size}x{size} matrix ({converged} eigenvalues converged)")]
    NonConvergence { size: usize, converged: usize },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("parse error at position {position}: expected {expected}, found {found}")]
    Parse {
        position: usize,
        expected: String,
        found: String,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("refusing to densify a {dim}x{dim} operator (cap is {cap})")]
    DensifyCap { dim: usize, cap: usize },

    #[error("matrix is not symmetric: max |S - S^T| = {asymmetry:e}")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix is singular: {0}")]
    Singular(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("search basis lost orthogonality: |V^T q| = {0:e}")]
    OrthogonalityViolation(f64),

    #[error("{}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

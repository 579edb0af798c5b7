use alloc::string::String;

/// Errors raised by the eigensolver core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("duplicate entry ({row}, {col}) at input position {position}")]
    DuplicateEntry { row: usize, col: usize, position: usize },

    #[error("non-finite value at input position {position}")]
    NonFinite { position: usize },

    #[error("matrix is not symmetric positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotSpd { min_eigenvalue: f64 },

    #[error("point is not on the Stiefel manifold: ||X^T X - I||_F = {residual:e}")]
    NotOrthonormal { residual: f64 },

    #[error("Jacobi eigensolver did not converge in {sweeps} sweeps (off-diagonal norm {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = core::result::Result<T, Error>;

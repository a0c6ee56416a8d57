//! Dense complex linear algebra for small matrices.

mod eig;
mod lu;
mod matrix;

pub use eig::{
    eig_small, eig_small_with, eigen_residual, min_gap, normalize_gauge, EigOptions,
    EigenDecomposition,
};
pub use lu::Lu;
pub use matrix::ComplexMatrix;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("matrix has no entries")]
    EmptyMatrix,
    #[error("expected {expected} entries, got {actual}")]
    EntryCount { expected: usize, actual: usize },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("rows have different lengths")]
    RaggedRows,
    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is singular (condition estimate {condition:e})")]
    SingularMatrix { condition: f64 },
    #[error("eigenvalues nearly coincide (gap {gap:e})")]
    DegenerateSpectrum { gap: f64 },
    #[error("eigenvalue iteration did not converge after {iterations} sweeps")]
    NoConvergence { iterations: usize },
    #[error("dimension {dim} exceeds the supported maximum {max}")]
    TooLarge { dim: usize, max: usize },
    #[error("eigen residual {residual:e} exceeds {bound:e}")]
    ResidualTooLarge { residual: f64, bound: f64 },
    #[error("eigenvector matrix is ill-conditioned (condition {condition:e})")]
    IllConditionedEigenvectors { condition: f64 },
}

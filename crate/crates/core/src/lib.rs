//! Eigendecomposition continuation along closed loops of parameterized
//! matrices, monodromy extraction, and localization of generic coalescence
//! points of eigenvalues.

pub mod cusp;
pub mod expr;
pub mod flow;
pub mod linalg;
pub mod model;

pub use cusp::{CuspError, GcpCandidate, GcpStatus};
pub use expr::Expr;
pub use flow::{FlowError, FlowOptions, Monodromy};
pub use linalg::{ComplexMatrix, EigenDecomposition, LinalgError};
pub use model::{Builtin, LoopSpec, ModelError, ParamMatrixFn, Point};
pub use num_complex::Complex64;

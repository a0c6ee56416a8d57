//! Continuation of a smooth eigendecomposition `A(γ(t)) = V(t) Λ(t) V(t)⁻¹`
//! along curves, with constant column norms and parallel-transport phases,
//! plus extraction of the monodromy `V(0)⁻¹ V(1) = Π Φ`.

mod matching;
mod monodromy;
mod ode;
mod quadrature;

pub use matching::match_eigenvalues;
pub use monodromy::{monodromy, monodromy_between, wrap_phase, Monodromy, MonodromyOptions};
pub use ode::{
    coupling_matrix, integrate_curve, integrate_loop, reversibility_check, EigenPath, FlowOptions, FlowState,
    Sample,
};
pub use quadrature::phase_by_quadrature;

use crate::linalg::LinalgError;
use crate::model::ModelError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FlowError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("eigenvalue collision on path at t = {t} (gap {gap:e})")]
    Collision { t: f64, gap: f64 },
    #[error("gauge drift exceeded at t = {t} (drift {drift:e})")]
    GaugeDrift { t: f64, drift: f64 },
    #[error("eigen residual {residual:e} exceeded tolerance at t = {t}")]
    ResidualExceeded { t: f64, residual: f64 },
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("drift correction could not match eigenvalues at t = {t}")]
    CorrectionMismatch { t: f64 },
    #[error("ambiguous pattern in row {row} (ratio {ratio:.3})")]
    AmbiguousPattern { row: usize, ratio: f64 },
    #[error("monodromy pattern is not a permutation")]
    NotPermutation,
    #[error("monodromy invariant violated: {0}")]
    Invariant(String),
    #[error("c vanishes on loop at t = {t}")]
    CVanishes { t: f64 },
    #[error("Δ vanishes on loop at t = {t}")]
    DeltaVanishes { t: f64 },
    #[error("operation requires a 2x2 matrix function, got n = {n}")]
    NotTwoByTwo { n: usize },
    #[error("invalid options: {0}")]
    InvalidOptions(String),
}

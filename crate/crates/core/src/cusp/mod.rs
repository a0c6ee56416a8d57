//! Coalescence points of eigenvalues for 2x2 matrix functions: the
//! discriminant map `F = [Re Δ, Im Δ]`, Newton refinement, domain-wide
//! localization and shrink-loop classification.

mod localize;
mod shrink;

pub use localize::{localize, IndicatedCell, LocalizeOptions, LocalizeReport, Rect};
pub use shrink::{shrink_scan, Hypothesis, ShrinkClass, ShrinkOptions, ShrinkScan};

use num_complex::Complex64;

use crate::flow::FlowError;
use crate::model::{ModelError, ParamMatrixFn, Point};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CuspError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error("operation requires a 2x2 matrix function, got n = {n}")]
    NotTwoByTwo { n: usize },
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("invalid rectangle: {0}")]
    InvalidRect(String),
    #[error("invalid scales: {0}")]
    InvalidScales(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GcpStatus {
    Verified,
    Rejected,
    Ambiguous,
}

impl GcpStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            GcpStatus::Verified => "verified",
            GcpStatus::Rejected => "rejected",
            GcpStatus::Ambiguous => "ambiguous",
        }
    }
}

/// How a candidate was first seeded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CandidateSource {
    /// A small loop around the point swaps a pair of eigenvalues.
    Monodromy,
    /// From a small value of `|Δ|` on a sample grid.
    Discriminant,
    /// Supplied directly by the caller.
    Seed,
}

impl CandidateSource {
    pub fn as_str(self) -> &'static str {
        match self {
            CandidateSource::Monodromy => "certified-by-monodromy",
            CandidateSource::Discriminant => "discriminant-seeded",
            CandidateSource::Seed => "seed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GcpCandidate {
    pub location: Point,
    /// `‖F(ξ)‖₂`.
    pub f_residual: f64,
    pub df: [[f64; 2]; 2],
    pub df_condition: f64,
    pub status: GcpStatus,
    pub source: CandidateSource,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub max_iter: usize,
    pub root_tol: f64,
    pub cond_max: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            max_iter: 50,
            root_tol: 1e-10,
            cond_max: 1e8,
        }
    }
}

fn require_2x2(f: &ParamMatrixFn) -> Result<(), CuspError> {
    match f.dim() {
        2 => Ok(()),
        n => Err(CuspError::NotTwoByTwo { n }),
    }
}

/// `Δ = (a − d)² + 4bc`.
pub fn discriminant(f: &ParamMatrixFn, p: Point) -> Result<Complex64, CuspError> {
    require_2x2(f)?;
    let a = f.evaluate(p)?;
    let diff = a[(0, 0)] - a[(1, 1)];
    Ok(diff * diff + 4.0 * a[(0, 1)] * a[(1, 0)])
}

fn f_vec(f: &ParamMatrixFn, p: Point) -> Result<[f64; 2], CuspError> {
    let d = discriminant(f, p)?;
    Ok([d.re, d.im])
}

/// `F(ξ)` and its Jacobian by central differences.
pub fn f_and_df(f: &ParamMatrixFn, p: Point) -> Result<([f64; 2], [[f64; 2]; 2]), CuspError> {
    let value = f_vec(f, p)?;
    let h = f.fd_step_at(p);
    let mut df = [[0.0; 2]; 2];
    for (col, dir) in [Point::new(h, 0.0), Point::new(0.0, h)].into_iter().enumerate() {
        let plus = f_vec(f, p + dir)?;
        let minus = f_vec(f, p - dir)?;
        for row in 0..2 {
            df[row][col] = (plus[row] - minus[row]) / (2.0 * h);
        }
    }
    Ok((value, df))
}

/// Two-norm condition number of a real 2x2 matrix, infinite when singular.
pub fn condition_2x2(m: &[[f64; 2]; 2]) -> f64 {
    let fro2 = m.iter().flatten().map(|v| v * v).sum::<f64>();
    let det = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).abs();
    let disc = (fro2 * fro2 - 4.0 * det * det).max(0.0).sqrt();
    let big = ((fro2 + disc) / 2.0).sqrt();
    let small = if big == 0.0 { 0.0 } else { det / big };
    if small == 0.0 {
        f64::INFINITY
    } else {
        big / small
    }
}

fn norm2(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

/// Newton direction, regularized when the Jacobian is too ill-conditioned to invert.
fn newton_step(df: &[[f64; 2]; 2], value: [f64; 2], cond_max: f64) -> [f64; 2] {
    let [[a, b], [c, d]] = *df;
    if condition_2x2(df) <= cond_max {
        let det = a * d - b * c;
        return [-(d * value[0] - b * value[1]) / det, -(-c * value[0] + a * value[1]) / det];
    }
    // (JᵀJ + μI) δ = −Jᵀ F
    let mu = 1e-6 * (a * a + b * b + c * c + d * d) + f64::MIN_POSITIVE;
    let g = [a * value[0] + c * value[1], b * value[0] + d * value[1]];
    let (p, q, r) = (a * a + c * c + mu, a * b + c * d, b * b + d * d + mu);
    let det = p * r - q * q;
    [-(r * g[0] - q * g[1]) / det, -(-q * g[0] + p * g[1]) / det]
}

/// Damped Newton on `F` from `seed`.
///
/// A converged point is [`GcpStatus::Verified`] when `DF` there has
/// condition at most `cond_max`, and [`GcpStatus::Ambiguous`] otherwise.
pub fn newton_refine(f: &ParamMatrixFn, seed: Point, opts: &NewtonOptions) -> Result<GcpCandidate, CuspError> {
    require_2x2(f)?;
    let mut p = seed;
    for k in 0..=opts.max_iter {
        let (value, df) = f_and_df(f, p)?;
        let residual = norm2(value);
        if residual <= opts.root_tol {
            let df_condition = condition_2x2(&df);
            let status = if df_condition <= opts.cond_max {
                GcpStatus::Verified
            } else {
                GcpStatus::Ambiguous
            };
            return Ok(GcpCandidate {
                location: p,
                f_residual: residual,
                df,
                df_condition,
                status,
                source: CandidateSource::Seed,
                iterations: k,
            });
        }
        if k == opts.max_iter {
            return Err(CuspError::NoConvergence { iterations: k, residual });
        }
        let step = newton_step(&df, value, opts.cond_max);
        let mut damping = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let trial = Point::new(p.x + damping * step[0], p.y + damping * step[1]);
            if let Ok(v) = f_vec(f, trial) {
                if norm2(v) < (1.0 - 1e-4 * damping) * residual {
                    accepted = Some(trial);
                    break;
                }
            }
            damping /= 2.0;
        }
        match accepted {
            Some(next) => p = next,
            None => return Err(CuspError::NoConvergence { iterations: k, residual }),
        }
    }
    unreachable!("loop returns on its last iteration")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ComplexMatrix;
    use crate::model::Builtin;

    #[test]
    fn discriminant_examples() {
        let sqrt = ParamMatrixFn::builtin(Builtin::Sqrt);
        let d = discriminant(&sqrt, Point::new(0.3, -0.7)).unwrap();
        assert!((d - Complex64::new(1.2, -2.8)).norm() < 1e-15);
        let pz = ParamMatrixFn::builtin(Builtin::PhaseZero { eps: 0.25 });
        assert!(discriminant(&pz, Point::new(0.5, 0.0)).unwrap().norm() < 1e-15);
        assert!(discriminant(&pz, Point::new(-0.5, 0.0)).unwrap().norm() < 1e-15);
        let diag = ParamMatrixFn::constant(ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 2.0]]).unwrap()).unwrap();
        assert_eq!(discriminant(&diag, Point::new(0.0, 0.0)).unwrap(), Complex64::new(1.0, 0.0));
        let big = ParamMatrixFn::builtin(Builtin::BlockN4 { eps: 0.0 });
        assert_eq!(discriminant(&big, Point::new(0.0, 0.0)), Err(CuspError::NotTwoByTwo { n: 4 }));
    }

    #[test]
    fn jacobian_matches_hand_derivative() {
        let eps = 0.25;
        let pz = ParamMatrixFn::builtin(Builtin::PhaseZero { eps });
        for &(x, y) in &[(0.3, -0.2), (1.1, 0.4), (-0.7, 0.9)] {
            let (value, df) = f_and_df(&pz, Point::new(x, y)).unwrap();
            assert!((value[0] - 4.0 * (x * x + y * y - eps)).abs() < 1e-12);
            assert!((value[1] - 4.0 * y).abs() < 1e-12);
            let expect = [[8.0 * x, 8.0 * y], [0.0, 4.0]];
            for r in 0..2 {
                for c in 0..2 {
                    assert!((df[r][c] - expect[r][c]).abs() < 1e-6, "{df:?}");
                }
            }
        }
        let (_, df) = f_and_df(&ParamMatrixFn::builtin(Builtin::Sqrt), Point::new(0.0, 0.0)).unwrap();
        assert!((df[0][0] - 4.0).abs() < 1e-8 && (df[1][1] - 4.0).abs() < 1e-8);
        assert!(df[0][1].abs() < 1e-8 && df[1][0].abs() < 1e-8);
        let diag = ParamMatrixFn::constant(ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 2.0]]).unwrap()).unwrap();
        let (value, df) = f_and_df(&diag, Point::new(0.2, 0.2)).unwrap();
        assert_eq!(value, [1.0, 0.0]);
        assert_eq!(df, [[0.0; 2]; 2]);
    }

    #[test]
    fn condition_numbers() {
        assert_eq!(condition_2x2(&[[4.0, 0.0], [0.0, 4.0]]), 1.0);
        assert!((condition_2x2(&[[2.0, 0.0], [0.0, 0.5]]) - 4.0).abs() < 1e-12);
        assert_eq!(condition_2x2(&[[1.0, 2.0], [2.0, 4.0]]), f64::INFINITY);
    }

    #[test]
    fn newton_on_phase_zero() {
        let pz = ParamMatrixFn::builtin(Builtin::PhaseZero { eps: 0.25 });
        let c = newton_refine(&pz, Point::new(0.4, 0.1), &NewtonOptions::default()).unwrap();
        assert_eq!(c.status, GcpStatus::Verified);
        assert!(c.location.distance(Point::new(0.5, 0.0)) < 1e-10);
        assert!(c.f_residual <= 1e-10);
        let exact = newton_refine(&pz, Point::new(0.5, 0.0), &NewtonOptions::default()).unwrap();
        assert_eq!(exact.iterations, 0);
        assert_eq!(exact.status, GcpStatus::Verified);
    }

    #[test]
    fn newton_on_phase_pi() {
        let eps: f64 = 0.1;
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        let root = Point::new((eps * golden).sqrt(), (eps / golden).sqrt());
        let pp = ParamMatrixFn::builtin(Builtin::PhasePi { eps });
        let c = newton_refine(&pp, Point::new(0.7, 0.3), &NewtonOptions::default()).unwrap();
        assert_eq!(c.status, GcpStatus::Verified);
        assert!(c.location.distance(root) < 1e-8, "{:?}", c.location);
    }

    #[test]
    fn newton_without_roots_fails() {
        let diag = ParamMatrixFn::constant(ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 2.0]]).unwrap()).unwrap();
        assert!(matches!(
            newton_refine(&diag, Point::new(0.0, 0.0), &NewtonOptions::default()),
            Err(CuspError::NoConvergence { .. })
        ));
    }
}

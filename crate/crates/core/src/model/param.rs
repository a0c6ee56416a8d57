use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use super::curve::Curve;
use super::{ModelError, Point};
use crate::expr::Expr;
use crate::linalg::ComplexMatrix;

type MatrixClosure = dyn Fn(Point) -> ComplexMatrix + Send + Sync;

/// Builtin fixture families, independent of the expression parser.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Builtin {
    /// `[[0, 1], [x+iy, 0]]`, a single coalescence at the origin.
    Sqrt,
    /// `[[0, 1], [x²+y²−ε+iy, 0]]`, coalescences at `(±√ε, 0)`.
    PhaseZero { eps: f64 },
    /// `[[0, 1], [xy−ε+i(x²−y²−ε), 0]]`, two coalescences on the line through the first and third quadrants.
    PhasePi { eps: f64 },
    /// `[[x, 1], [x+iy, 0]]`, a coalescence at the origin without the
    /// anti-diagonal structure of [`Builtin::Sqrt`].
    TiltedSqrt,
    /// `[[0, 1], [x+iy−ε, 0]] ⊕ diag(3 + x/2, −3 + iy/2)`.
    BlockN4 { eps: f64 },
    /// `([[0, 1], [z−ε, 0]] + 3I) ⊕ ([[0, 1], [z+ε, 0]] − 3I) ⊕ [6i]` with `z = x+iy`.
    BlockN5 { eps: f64 },
    /// Companion matrix of `λ³ − 3λ − 2z` ⊕ `[6i]`. The pair near `−1`
    /// coalesces at `z = 1` and the pair near `1` at `z = −1`.
    ConsecN4,
}

impl Builtin {
    pub const NAMES: [&'static str; 7] = [
        "sqrt",
        "phase_zero",
        "phase_pi",
        "tilted_sqrt",
        "block_n4",
        "block_n5",
        "consec_n4",
    ];

    /// Looks up a builtin by name; `eps` defaults per family when absent.
    pub fn from_name(name: &str, eps: Option<f64>) -> Option<Builtin> {
        Some(match name {
            "sqrt" => Builtin::Sqrt,
            "phase_zero" => Builtin::PhaseZero {
                eps: eps.unwrap_or(0.25),
            },
            "phase_pi" => Builtin::PhasePi {
                eps: eps.unwrap_or(0.1),
            },
            "tilted_sqrt" => Builtin::TiltedSqrt,
            "block_n4" => Builtin::BlockN4 {
                eps: eps.unwrap_or(0.0),
            },
            "block_n5" => Builtin::BlockN5 {
                eps: eps.unwrap_or(0.5),
            },
            "consec_n4" => Builtin::ConsecN4,
            _ => return None,
        })
    }

    pub fn dim(self) -> usize {
        match self {
            Builtin::Sqrt | Builtin::PhaseZero { .. } | Builtin::PhasePi { .. } | Builtin::TiltedSqrt => 2,
            Builtin::BlockN4 { .. } | Builtin::ConsecN4 => 4,
            Builtin::BlockN5 { .. } => 5,
        }
    }

    fn evaluate(self, p: Point) -> ComplexMatrix {
        let (x, y) = (p.x, p.y);
        let c = Complex64::new;
        let z = c(x, y);
        let zero = c(0.0, 0.0);
        let one = c(1.0, 0.0);
        let rows: Vec<Vec<Complex64>> = match self {
            Builtin::Sqrt => vec![vec![zero, one], vec![z, zero]],
            Builtin::PhaseZero { eps } => vec![vec![zero, one], vec![c(x * x + y * y - eps, y), zero]],
            Builtin::PhasePi { eps } => vec![
                vec![zero, one],
                vec![c(x * y - eps, x * x - y * y - eps), zero],
            ],
            Builtin::TiltedSqrt => vec![vec![c(x, 0.0), one], vec![z, zero]],
            Builtin::BlockN4 { eps } => vec![
                vec![zero, one, zero, zero],
                vec![z - eps, zero, zero, zero],
                vec![zero, zero, c(3.0 + 0.5 * x, 0.0), zero],
                vec![zero, zero, zero, c(-3.0, 0.5 * y)],
            ],
            Builtin::BlockN5 { eps } => {
                let three = c(3.0, 0.0);
                vec![
                    vec![three, one, zero, zero, zero],
                    vec![z - eps, three, zero, zero, zero],
                    vec![zero, zero, -three, one, zero],
                    vec![zero, zero, z + eps, -three, zero],
                    vec![zero, zero, zero, zero, c(0.0, 6.0)],
                ]
            }
            Builtin::ConsecN4 => vec![
                vec![zero, one, zero, zero],
                vec![zero, zero, one, zero],
                vec![z * 2.0, c(3.0, 0.0), zero, zero],
                vec![zero, zero, zero, c(0.0, 6.0)],
            ],
        };
        ComplexMatrix::from_rows(&rows).expect("builtin rows are rectangular")
    }
}

#[derive(Clone)]
enum Source {
    Entries(Arc<Vec<Expr>>),
    Builtin(Builtin),
    Constant(ComplexMatrix),
    Closure(Arc<MatrixClosure>),
}

/// A matrix-valued function `ξ = (x, y) ↦ A(ξ) ∈ C^{n×n}`.
#[derive(Clone)]
pub struct ParamMatrixFn {
    n: usize,
    source: Source,
    fd_step: Option<f64>,
}

impl fmt::Debug for ParamMatrixFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.source {
            Source::Entries(_) => "entries".to_string(),
            Source::Builtin(b) => format!("{b:?}"),
            Source::Constant(_) => "constant".to_string(),
            Source::Closure(_) => "closure".to_string(),
        };
        f.debug_struct("ParamMatrixFn")
            .field("n", &self.n)
            .field("source", &kind)
            .field("fd_step", &self.fd_step)
            .finish()
    }
}

impl ParamMatrixFn {
    /// Entry expressions in row-major order.
    pub fn from_exprs(n: usize, entries: Vec<Expr>) -> Result<Self, ModelError> {
        if n == 0 || entries.len() != n * n {
            return Err(ModelError::Shape(format!(
                "expected {} entries for n = {n}, got {}",
                n * n,
                entries.len()
            )));
        }
        Ok(Self {
            n,
            source: Source::Entries(Arc::new(entries)),
            fd_step: None,
        })
    }

    /// Parses a square grid of entry strings.
    pub fn parse_entries<S: AsRef<str>>(rows: &[Vec<S>]) -> Result<Self, ModelError> {
        let n = rows.len();
        let mut exprs = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(ModelError::Shape(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            for (j, src) in row.iter().enumerate() {
                let e = Expr::parse(src.as_ref()).map_err(|source| ModelError::Parse { row: i, col: j, source })?;
                exprs.push(e);
            }
        }
        Self::from_exprs(n, exprs)
    }

    pub fn builtin(b: Builtin) -> Self {
        Self {
            n: b.dim(),
            source: Source::Builtin(b),
            fd_step: None,
        }
    }

    pub fn constant(a: ComplexMatrix) -> Result<Self, ModelError> {
        if !a.is_square() {
            return Err(ModelError::Shape(format!("constant matrix is {}x{}", a.rows(), a.cols())));
        }
        Ok(Self {
            n: a.rows(),
            source: Source::Constant(a),
            fd_step: None,
        })
    }

    /// Wraps a closure returning `n × n` matrices.
    pub fn from_fn(n: usize, f: impl Fn(Point) -> ComplexMatrix + Send + Sync + 'static) -> Self {
        Self {
            n,
            source: Source::Closure(Arc::new(f)),
            fd_step: None,
        }
    }

    pub fn with_fd_step(mut self, h: f64) -> Self {
        self.fd_step = Some(h);
        self
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_builtin(&self) -> Option<Builtin> {
        match self.source {
            Source::Builtin(b) => Some(b),
            _ => None,
        }
    }

    /// Finite-difference step at `ξ`: the configured step, or
    /// `ε^{1/3} · max(1, ‖ξ‖)`.
    pub fn fd_step_at(&self, p: Point) -> f64 {
        self.fd_step
            .unwrap_or_else(|| f64::EPSILON.cbrt() * p.norm().max(1.0))
    }

    pub fn evaluate(&self, p: Point) -> Result<ComplexMatrix, ModelError> {
        if !(p.x.is_finite() && p.y.is_finite()) {
            return Err(ModelError::NonFinite { x: p.x, y: p.y });
        }
        let m = match &self.source {
            Source::Builtin(b) => b.evaluate(p),
            Source::Constant(a) => a.clone(),
            Source::Closure(f) => f(p),
            Source::Entries(exprs) => {
                let data = exprs
                    .iter()
                    .map(|e| e.eval(p.x, p.y))
                    .collect::<Result<Vec<_>, _>>()?;
                ComplexMatrix::new(self.n, self.n, data).map_err(|_| ModelError::NonFinite { x: p.x, y: p.y })?
            }
        };
        if m.rows() != self.n || m.cols() != self.n {
            return Err(ModelError::Shape(format!(
                "function returned a {}x{} matrix, expected {n}x{n}",
                m.rows(),
                m.cols(),
                n = self.n
            )));
        }
        if !m.is_finite() {
            return Err(ModelError::NonFinite { x: p.x, y: p.y });
        }
        Ok(m)
    }

    /// Central-difference partials `(∂A/∂x, ∂A/∂y)`.
    pub fn partials(&self, p: Point) -> Result<(ComplexMatrix, ComplexMatrix), ModelError> {
        if let Source::Constant(a) = &self.source {
            let z = ComplexMatrix::zeros(a.rows(), a.cols());
            return Ok((z.clone(), z));
        }
        let h = self.fd_step_at(p);
        let dx = central(self, p, Point::new(h, 0.0), h)?;
        let dy = central(self, p, Point::new(0.0, h), h)?;
        Ok((dx, dy))
    }

    /// Directional derivative `dA(ξ; u)` from the partials.
    pub fn directional(&self, p: Point, u: Point) -> Result<ComplexMatrix, ModelError> {
        let (dx, dy) = self.partials(p)?;
        Ok(dx.zip_map(&dy, |a, b| a * u.x + b * u.y))
    }

    /// `d/dt A(γ(t))` by the chain rule.
    pub fn derivative_along(&self, curve: &dyn Curve, t: f64) -> Result<ComplexMatrix, ModelError> {
        self.directional(curve.point(t), curve.velocity(t))
    }

    /// `d/dt A(γ(t))` by a central difference in `t` with step `h`.
    pub fn derivative_along_fd(&self, curve: &dyn Curve, t: f64, h: f64) -> Result<ComplexMatrix, ModelError> {
        let plus = self.evaluate(curve.point(t + h))?;
        let minus = self.evaluate(curve.point(t - h))?;
        Ok(plus.zip_map(&minus, |a, b| (a - b) / (2.0 * h)))
    }

    /// Evaluates `A` and `d/dt A` along a curve in one call.
    pub fn value_and_derivative(
        &self,
        curve: &dyn Curve,
        t: f64,
    ) -> Result<(ComplexMatrix, ComplexMatrix), ModelError> {
        let p = curve.point(t);
        Ok((self.evaluate(p)?, self.directional(p, curve.velocity(t))?))
    }
}

fn central(f: &ParamMatrixFn, p: Point, step: Point, h: f64) -> Result<ComplexMatrix, ModelError> {
    let plus = f.evaluate(p + step)?;
    let minus = f.evaluate(p - step)?;
    Ok(plus.zip_map(&minus, |a, b| (a - b) / (2.0 * h)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LoopSpec, Segment};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn builtin_examples() {
        let sqrt = ParamMatrixFn::builtin(Builtin::Sqrt);
        let a = sqrt.evaluate(Point::new(0.0, 0.0)).unwrap();
        assert_eq!(a, ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap());
        let pz = ParamMatrixFn::builtin(Builtin::PhaseZero { eps: 0.25 });
        let a = pz.evaluate(Point::new(0.5, 0.0)).unwrap();
        assert_eq!(a, ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap());
        let p = Point::new(0.3, -1.1);
        for name in Builtin::NAMES {
            let f = ParamMatrixFn::builtin(Builtin::from_name(name, None).unwrap());
            assert_eq!(f.evaluate(p).unwrap(), f.evaluate(p).unwrap());
            assert_eq!(f.evaluate(p).unwrap().rows(), f.dim());
        }
    }

    #[test]
    fn expressions_match_builtins() {
        let pz = ParamMatrixFn::parse_entries(&[vec!["0", "1"], vec!["x^2+y^2-0.25+i*y", "0"]]).unwrap();
        let pp = ParamMatrixFn::parse_entries(&[vec!["0", "1"], vec!["x*y-0.1+i*(x^2-y^2-0.1)", "0"]]).unwrap();
        let bz = ParamMatrixFn::builtin(Builtin::PhaseZero { eps: 0.25 });
        let bp = ParamMatrixFn::builtin(Builtin::PhasePi { eps: 0.1 });
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let p = Point::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            assert!(pz.evaluate(p).unwrap().distance(&bz.evaluate(p).unwrap()) < 1e-15);
            assert!(pp.evaluate(p).unwrap().distance(&bp.evaluate(p).unwrap()) < 1e-15);
        }
    }

    #[test]
    fn entry_errors() {
        assert!(matches!(
            ParamMatrixFn::parse_entries(&[vec!["0", "1"], vec!["2x", "0"]]),
            Err(ModelError::Parse { row: 1, col: 0, .. })
        ));
        assert!(ParamMatrixFn::parse_entries(&[vec!["0", "1"]]).is_err());
        let f = ParamMatrixFn::parse_entries(&[vec!["1/x"]]).unwrap();
        assert!(matches!(f.evaluate(Point::new(0.0, 1.0)), Err(ModelError::Eval(_))));
    }

    #[test]
    fn constant_derivative_is_zero() {
        let f = ParamMatrixFn::constant(ComplexMatrix::from_diag(&[c(1.0, 0.0), c(2.0, 0.0)])).unwrap();
        let l = LoopSpec::circle(Point::new(0.0, 0.0), 1.0).unwrap();
        assert_eq!(f.derivative_along(&l, 0.3).unwrap(), ComplexMatrix::zeros(2, 2));
    }

    #[test]
    fn sqrt_derivative_on_unit_circle() {
        let f = ParamMatrixFn::builtin(Builtin::Sqrt);
        let l = LoopSpec::circle(Point::new(0.0, 0.0), 1.0).unwrap();
        let d = f.derivative_along(&l, 0.0).unwrap();
        assert!((d[(1, 0)] - c(0.0, std::f64::consts::TAU)).norm() < 1e-8);
        assert!(d[(0, 1)].norm() == 0.0 && d[(0, 0)].norm() == 0.0);
    }

    #[test]
    fn chain_rule_agrees_with_t_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let l = LoopSpec::ellipse(Point::new(0.1, 0.2), (1.3, 0.8)).unwrap();
        for _ in 0..10 {
            let coeffs: Vec<Complex64> = (0..12).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let f = ParamMatrixFn::from_fn(2, move |p| {
                let k = &coeffs;
                let e = |j: usize| k[j] + k[j + 4] * p.x * p.y + k[j + 8] * (p.x * p.x - p.y).sin();
                ComplexMatrix::new(2, 2, vec![e(0), e(1), e(2), e(3)]).unwrap()
            });
            for j in 0..8 {
                let t = j as f64 / 8.0 + 0.01;
                let chain = f.derivative_along(&l, t).unwrap();
                let fd = f.derivative_along_fd(&l, t, 1e-5).unwrap();
                assert!(chain.distance(&fd) <= 1e-7 * chain.frobenius_norm().max(1.0));
            }
        }
    }

    #[test]
    fn t_difference_is_second_order() {
        let f = ParamMatrixFn::parse_entries(&[vec!["exp(x)*sin(y)", "x^3"], vec!["cos(x*y)", "i*y^2"]]).unwrap();
        let seg = Segment::new(Point::new(0.2, 0.4), Point::new(1.0, -0.3));
        let t = 0.4;
        // Reference from a much smaller step with Richardson extrapolation.
        let r = |h: f64| f.derivative_along_fd(&seg, t, h).unwrap();
        let exact = r(1e-4).scale(c(4.0 / 3.0, 0.0)).sub(&r(2e-4).scale(c(1.0 / 3.0, 0.0))).unwrap();
        let e1 = r(1e-2).distance(&exact);
        let e2 = r(5e-3).distance(&exact);
        let ratio = e1 / e2;
        assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn directional_is_linear() {
        let f = ParamMatrixFn::builtin(Builtin::PhasePi { eps: 0.1 });
        let p = Point::new(0.4, -0.7);
        let u = Point::new(0.3, 1.2);
        let v = Point::new(-0.8, 0.5);
        let lhs = f.directional(p, u * 2.0 + v).unwrap();
        let rhs = f.directional(p, u).unwrap().scale(c(2.0, 0.0)).add(&f.directional(p, v).unwrap()).unwrap();
        assert!(lhs.distance(&rhs) < 1e-12);
    }

    #[test]
    fn periodic_along_loop() {
        let f = ParamMatrixFn::builtin(Builtin::PhasePi { eps: 0.1 });
        let l = LoopSpec::circle(Point::new(0.2, 0.0), 2.0).unwrap();
        for k in 0..256 {
            let t = k as f64 / 256.0 + 0.003;
            let a = f.evaluate(l.point(t)).unwrap();
            let b = f.evaluate(l.point(t + 1.0)).unwrap();
            assert!(a.distance(&b) <= 1e-14);
        }
    }
}

//! Matrix functions of two real parameters and the loops they are sampled on.

mod curve;
mod param;
mod warp;

use std::ops::{Add, Mul, Sub};

pub use curve::{Curve, LoopSpec, Segment, Shape, SmoothPolygon};
pub use param::{Builtin, ParamMatrixFn};
pub use warp::Warp;

use crate::expr::{EvalError, ParseError};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    /// Counterclockwise quarter turn.
    pub fn perp(self) -> Point {
        Point::new(-self.y, self.x)
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl From<(f64, f64)> for Point {
    fn from((x, y): (f64, f64)) -> Self {
        Point::new(x, y)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("entry ({row}, {col}): {source}")]
    Parse {
        row: usize,
        col: usize,
        #[source]
        source: ParseError,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{0}")]
    Shape(String),
    #[error("matrix function is not finite at ({x}, {y})")]
    NonFinite { x: f64, y: f64 },
    #[error("invalid loop: {0}")]
    InvalidLoop(String),
    #[error("shrink scale {0} is outside (0, 1]")]
    ScaleOutOfRange(f64),
    #[error("constant along loop")]
    ConstantAlongLoop,
}

/// Number of samples used to scan a loop for the warp window.
const WARP_SAMPLES: usize = 1024;

/// Returns `γ ∘ φ` for a smooth warp `φ` under which `A ∘ γ ∘ φ` has least
/// period 1.
///
/// The window centre `t*` maximizes `‖A(γ(t)) − A(γ(0))‖_F` over 1024
/// samples; the window is the sampled stretch around `t*` where that distance
/// stays above half its maximum.
pub fn reparametrize_min_period(gamma: &LoopSpec, f: &ParamMatrixFn) -> Result<LoopSpec, ModelError> {
    let a0 = f.evaluate(gamma.point(0.0))?;
    let dist: Vec<f64> = (0..WARP_SAMPLES)
        .map(|k| {
            let t = k as f64 / WARP_SAMPLES as f64;
            f.evaluate(gamma.point(t)).map(|a| a.distance(&a0))
        })
        .collect::<Result<_, _>>()?;
    let (k_star, &max) = dist
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty scan");
    let scale = a0.frobenius_norm().max(1.0);
    if max <= 1e-12 * scale {
        return Err(ModelError::ConstantAlongLoop);
    }
    let half = max / 2.0;
    let mut left = 0;
    while k_star - left > 1 && dist[k_star - left - 1] > half {
        left += 1;
    }
    let mut right = 0;
    while k_star + right + 1 < WARP_SAMPLES && dist[k_star + right + 1] > half {
        right += 1;
    }
    let h = 1.0 / WARP_SAMPLES as f64;
    let t_star = k_star as f64 * h;
    // At least one sample spacing, kept strictly inside (0, 1).
    let reach = (left.min(right).max(1) as f64 * h * 0.9)
        .min(0.9 * t_star)
        .min(0.9 * (1.0 - t_star));
    Ok(gamma.with_warp(Warp::new(t_star, reach)))
}

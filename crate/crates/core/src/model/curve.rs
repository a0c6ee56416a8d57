use std::f64::consts::TAU;
use std::sync::Arc;

use super::warp::Warp;
use super::{ModelError, Point};

/// A parametrized plane curve with an analytic velocity.
pub trait Curve: Send + Sync {
    fn point(&self, t: f64) -> Point;
    fn velocity(&self, t: f64) -> Point;
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Circle {
        center: Point,
        radius: f64,
    },
    Ellipse {
        center: Point,
        semi_axes: (f64, f64),
    },
    Polygon(SmoothPolygon),
}

impl Shape {
    fn point(&self, u: f64) -> Point {
        match self {
            Shape::Circle { center, radius } => {
                let (s, c) = (TAU * u).sin_cos();
                Point::new(center.x + radius * c, center.y + radius * s)
            }
            Shape::Ellipse { center, semi_axes } => {
                let (s, c) = (TAU * u).sin_cos();
                Point::new(center.x + semi_axes.0 * c, center.y + semi_axes.1 * s)
            }
            Shape::Polygon(p) => p.point(u),
        }
    }

    fn velocity(&self, u: f64) -> Point {
        match self {
            Shape::Circle { radius, .. } => {
                let (s, c) = (TAU * u).sin_cos();
                Point::new(-TAU * radius * s, TAU * radius * c)
            }
            Shape::Ellipse { semi_axes, .. } => {
                let (s, c) = (TAU * u).sin_cos();
                Point::new(-TAU * semi_axes.0 * s, TAU * semi_axes.1 * c)
            }
            Shape::Polygon(p) => p.velocity(u),
        }
    }
}

/// Closed, counterclockwise, 1-periodic loop: a base shape, optional
/// parameter warps, and a stack of contractions toward anchors.
#[derive(Debug, Clone)]
pub struct LoopSpec {
    shape: Shape,
    warps: Vec<Arc<Warp>>,
    contractions: Vec<(Point, f64)>,
}

impl PartialEq for LoopSpec {
    fn eq(&self, other: &Self) -> bool {
        self.shape == other.shape
            && self.contractions == other.contractions
            && self.warps.len() == other.warps.len()
            && self.warps.iter().zip(&other.warps).all(|(a, b)| Arc::ptr_eq(a, b))
    }
}

impl LoopSpec {
    pub fn circle(center: Point, radius: f64) -> Result<Self, ModelError> {
        check_point(center)?;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(ModelError::InvalidLoop(format!("radius must be positive, got {radius}")));
        }
        Ok(Self::from_shape(Shape::Circle { center, radius }))
    }

    pub fn ellipse(center: Point, semi_axes: (f64, f64)) -> Result<Self, ModelError> {
        check_point(center)?;
        let (a, b) = semi_axes;
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(ModelError::InvalidLoop(format!(
                "semi-axes must be positive, got ({a}, {b})"
            )));
        }
        Ok(Self::from_shape(Shape::Ellipse { center, semi_axes }))
    }

    /// Simple polygon with corners rounded by arcs of `corner_radius`.
    /// Clockwise vertex lists are reversed.
    pub fn polygon(vertices: &[Point], corner_radius: f64) -> Result<Self, ModelError> {
        let loop_ = Self::from_shape(Shape::Polygon(SmoothPolygon::new(vertices, corner_radius)?));
        if !loop_.is_injective(1024, 1e-12) {
            return Err(ModelError::InvalidLoop("polygon is not simple".into()));
        }
        Ok(loop_)
    }

    /// Axis-aligned rectangle `[x0, x1] × [y0, y1]` with rounded corners.
    pub fn rectangle(x: (f64, f64), y: (f64, f64), corner_radius: f64) -> Result<Self, ModelError> {
        Self::polygon(
            &[
                Point::new(x.0, y.0),
                Point::new(x.1, y.0),
                Point::new(x.1, y.1),
                Point::new(x.0, y.1),
            ],
            corner_radius,
        )
    }

    fn from_shape(shape: Shape) -> Self {
        Self {
            shape,
            warps: Vec::new(),
            contractions: Vec::new(),
        }
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn is_warped(&self) -> bool {
        !self.warps.is_empty()
    }

    /// Applied warps, oldest first.
    pub fn warps(&self) -> impl Iterator<Item = &Warp> {
        self.warps.iter().map(|w| w.as_ref())
    }

    /// `γ_s(t) = ξ₀ + s(γ(t) − ξ₀)`.
    pub fn shrink(&self, anchor: Point, s: f64) -> Result<Self, ModelError> {
        check_point(anchor)?;
        if !(s > 0.0 && s <= 1.0) {
            return Err(ModelError::ScaleOutOfRange(s));
        }
        let mut out = self.clone();
        if s != 1.0 {
            out.contractions.push((anchor, s));
        }
        Ok(out)
    }

    pub(crate) fn with_warp(&self, warp: Warp) -> Self {
        let mut out = self.clone();
        out.warps.push(Arc::new(warp));
        out
    }

    /// Warped parameter and its derivative. Warps compose with the most
    /// recent applied first.
    fn warp_param(&self, t: f64) -> (f64, f64) {
        let mut u = t;
        let mut du = 1.0;
        for w in self.warps.iter().rev() {
            du *= w.derivative(u);
            u = w.value(u);
        }
        (u, du)
    }

    /// Reduces to `[0, 1)` so that `γ(t + 1) = γ(t)` up to the rounding of the reduction.
    fn reduce(u: f64) -> f64 {
        let r = u.rem_euclid(1.0);
        if r >= 1.0 {
            0.0
        } else {
            r
        }
    }

    /// Samples `n` points at `t = k/n` and checks that non-neighbouring samples
    /// are at least `rel_tol · diameter` apart.
    pub fn is_injective(&self, n: usize, rel_tol: f64) -> bool {
        let pts: Vec<Point> = (0..n).map(|k| self.point(k as f64 / n as f64)).collect();
        let diameter = bounding_diameter(&pts);
        let tol = rel_tol * diameter.max(f64::MIN_POSITIVE);
        for i in 0..n {
            for j in (i + 2)..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                if pts[i].distance(pts[j]) <= tol {
                    return false;
                }
            }
        }
        true
    }

    /// Bounding box `(min, max)` estimated from `n` samples.
    pub fn bounding_box(&self, n: usize) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for k in 0..n {
            let p = self.point(k as f64 / n as f64);
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        (lo, hi)
    }
}

impl Curve for LoopSpec {
    fn point(&self, t: f64) -> Point {
        let (u, _) = self.warp_param(t);
        let mut p = self.shape.point(Self::reduce(u));
        for &(anchor, s) in &self.contractions {
            p = anchor + (p - anchor) * s;
        }
        p
    }

    fn velocity(&self, t: f64) -> Point {
        let (u, du) = self.warp_param(t);
        let mut v = self.shape.velocity(Self::reduce(u)) * du;
        for &(_, s) in &self.contractions {
            v = v * s;
        }
        v
    }
}

/// Straight open path from `start` to `end` over `t ∈ [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: Point,
    pub end: Point,
}

impl Segment {
    pub fn new(start: Point, end: Point) -> Self {
        Self { start, end }
    }

    pub fn length(&self) -> f64 {
        self.start.distance(self.end)
    }
}

impl Curve for Segment {
    fn point(&self, t: f64) -> Point {
        self.start + (self.end - self.start) * t
    }

    fn velocity(&self, _t: f64) -> Point {
        self.end - self.start
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Piece {
    Line { from: Point, dir: Point },
    Arc { center: Point, radius: f64, start_angle: f64, sweep: f64 },
}

/// Polygon with rounded corners, parametrized proportionally to arc length.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothPolygon {
    vertices: Vec<Point>,
    corner_radius: f64,
    pieces: Vec<(f64, f64, Piece)>,
    total: f64,
}

impl SmoothPolygon {
    fn new(vertices: &[Point], corner_radius: f64) -> Result<Self, ModelError> {
        if vertices.len() < 3 {
            return Err(ModelError::InvalidLoop("polygon needs at least 3 vertices".into()));
        }
        for &v in vertices {
            check_point(v)?;
        }
        if !(corner_radius > 0.0 && corner_radius.is_finite()) {
            return Err(ModelError::InvalidLoop(format!(
                "corner radius must be positive, got {corner_radius}"
            )));
        }
        let mut verts = vertices.to_vec();
        if signed_area(&verts) < 0.0 {
            verts.reverse();
        }
        if signed_area(&verts).abs() == 0.0 {
            return Err(ModelError::InvalidLoop("polygon has zero area".into()));
        }
        let n = verts.len();
        let dirs: Vec<Point> = (0..n)
            .map(|k| {
                let d = verts[(k + 1) % n] - verts[k];
                d * (1.0 / d.norm())
            })
            .collect();
        let lens: Vec<f64> = (0..n).map(|k| verts[k].distance(verts[(k + 1) % n])).collect();
        if lens.iter().any(|&l| l == 0.0) {
            return Err(ModelError::InvalidLoop("polygon has repeated vertices".into()));
        }

        // Tangent length cut from each vertex by its rounding arc.
        let mut cut = vec![0.0; n];
        let mut turn = vec![0.0; n];
        for k in 0..n {
            let d_in = dirs[(k + n - 1) % n];
            let d_out = dirs[k];
            let theta = d_in.cross(d_out).atan2(d_in.dot(d_out));
            turn[k] = theta;
            cut[k] = corner_radius * (theta.abs() / 2.0).tan();
        }
        for k in 0..n {
            if cut[k] + cut[(k + 1) % n] > lens[k] {
                return Err(ModelError::InvalidLoop(format!(
                    "corner radius {corner_radius} too large for edge {k}"
                )));
            }
        }

        let mut pieces = Vec::new();
        let mut acc = 0.0;
        for k in 0..n {
            let from = verts[k] + dirs[k] * cut[k];
            let len = lens[k] - cut[k] - cut[(k + 1) % n];
            if len > 0.0 {
                pieces.push((acc, len, Piece::Line { from, dir: dirs[k] }));
                acc += len;
            }
            let next = (k + 1) % n;
            let theta = turn[next];
            if theta != 0.0 {
                let tangent_point = verts[next] - dirs[k] * cut[next];
                let normal = dirs[k].perp() * theta.signum();
                let center = tangent_point + normal * corner_radius;
                let r = tangent_point - center;
                let start_angle = r.y.atan2(r.x);
                let len = corner_radius * theta.abs();
                pieces.push((
                    acc,
                    len,
                    Piece::Arc {
                        center,
                        radius: corner_radius,
                        start_angle,
                        sweep: theta,
                    },
                ));
                acc += len;
            }
        }
        Ok(Self {
            vertices: verts,
            corner_radius,
            pieces,
            total: acc,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn corner_radius(&self) -> f64 {
        self.corner_radius
    }

    pub fn perimeter(&self) -> f64 {
        self.total
    }

    fn locate(&self, u: f64) -> (&Piece, f64, f64) {
        let s = u * self.total;
        let idx = self
            .pieces
            .partition_point(|(start, _, _)| *start <= s)
            .saturating_sub(1);
        let (start, len, piece) = &self.pieces[idx];
        let frac = ((s - start) / len).clamp(0.0, 1.0);
        (piece, frac, *len)
    }

    fn point(&self, u: f64) -> Point {
        match self.locate(u) {
            (Piece::Line { from, dir }, frac, len) => *from + *dir * (frac * len),
            (
                Piece::Arc {
                    center,
                    radius,
                    start_angle,
                    sweep,
                },
                frac,
                _,
            ) => {
                let (s, c) = (start_angle + sweep * frac).sin_cos();
                *center + Point::new(c, s) * *radius
            }
        }
    }

    fn velocity(&self, u: f64) -> Point {
        match self.locate(u) {
            (Piece::Line { dir, .. }, _, _) => *dir * self.total,
            (
                Piece::Arc {
                    start_angle, sweep, ..
                },
                frac,
                _,
            ) => {
                let (s, c) = (start_angle + sweep * frac).sin_cos();
                Point::new(-s, c) * (sweep.signum() * self.total)
            }
        }
    }
}

fn signed_area(v: &[Point]) -> f64 {
    let n = v.len();
    (0..n).map(|k| v[k].cross(v[(k + 1) % n])).sum::<f64>() / 2.0
}

fn bounding_diameter(pts: &[Point]) -> f64 {
    let (mut lo, mut hi) = (Point::new(f64::INFINITY, f64::INFINITY), Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
    for p in pts {
        lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    lo.distance(hi)
}

fn check_point(p: Point) -> Result<(), ModelError> {
    if p.x.is_finite() && p.y.is_finite() {
        Ok(())
    } else {
        Err(ModelError::InvalidLoop(format!("non-finite point ({}, {})", p.x, p.y)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_circle() -> LoopSpec {
        LoopSpec::circle(Point::new(0.0, 0.0), 1.0).unwrap()
    }

    fn fixtures() -> Vec<LoopSpec> {
        vec![
            unit_circle(),
            LoopSpec::ellipse(Point::new(0.3, -0.2), (1.5, 0.4)).unwrap(),
            LoopSpec::rectangle((-1.0, 1.0), (-0.5, 0.5), 0.05).unwrap(),
            LoopSpec::polygon(
                &[Point::new(0.0, 0.0), Point::new(0.0, 1.0), Point::new(1.0, 1.0), Point::new(2.0, 0.0)],
                0.1,
            )
            .unwrap(),
            unit_circle().shrink(Point::new(0.2, 0.1), 0.3).unwrap(),
        ]
    }

    #[test]
    fn periodic_and_injective() {
        for l in fixtures() {
            for k in 0..256 {
                let t = k as f64 / 256.0 + 0.001;
                assert!(l.point(t + 1.0).distance(l.point(t)) <= 1e-14);
                assert!(l.point(t - 3.0).distance(l.point(t)) <= 1e-14);
            }
            assert!(l.is_injective(1024, 1e-9));
        }
    }

    #[test]
    fn counterclockwise_orientation() {
        for l in fixtures() {
            // Shoelace area of the sampled loop.
            let n = 2000;
            let pts: Vec<Point> = (0..n).map(|k| l.point(k as f64 / n as f64)).collect();
            assert!(signed_area(&pts) > 0.0);
        }
        let cw = LoopSpec::polygon(
            &[Point::new(0.0, 0.0), Point::new(0.0, 1.0), Point::new(1.0, 1.0), Point::new(1.0, 0.0)],
            0.1,
        )
        .unwrap();
        let n = 400;
        let pts: Vec<Point> = (0..n).map(|k| cw.point(k as f64 / n as f64)).collect();
        assert!(signed_area(&pts) > 0.0);
    }

    #[test]
    fn velocity_matches_difference_quotient() {
        for l in fixtures() {
            for k in 0..97 {
                let t = (k as f64 + 0.31) / 97.0;
                let h = 1e-6;
                let fd = (l.point(t + h) - l.point(t - h)) * (0.5 / h);
                let v = l.velocity(t);
                assert!(fd.distance(v) <= 1e-6 * v.norm().max(1.0), "{fd:?} vs {v:?}");
            }
        }
    }

    #[test]
    fn polygon_is_c1_at_joins() {
        let l = LoopSpec::rectangle((0.0, 2.0), (0.0, 1.0), 0.2).unwrap();
        let Shape::Polygon(p) = l.shape() else { unreachable!() };
        for (start, _, _) in &p.pieces {
            let u = start / p.total;
            let before = l.velocity(u - 1e-12);
            let after = l.velocity(u + 1e-12);
            assert!(before.distance(after) <= 1e-6 * after.norm());
        }
        assert!((p.perimeter() - (6.0 - 8.0 * 0.2 + std::f64::consts::TAU * 0.2)).abs() < 1e-12);
    }

    #[test]
    fn shrink_examples() {
        let big = LoopSpec::circle(Point::new(0.0, 0.0), 2.0).unwrap();
        let half = big.shrink(Point::new(0.0, 0.0), 0.5).unwrap();
        let unit = unit_circle();
        for k in 0..64 {
            let t = k as f64 / 64.0;
            assert!(half.point(t).distance(unit.point(t)) <= 1e-15);
        }
        assert_eq!(big.shrink(Point::new(3.0, 1.0), 1.0).unwrap(), big);
        let anchor = Point::new(0.7, -0.4);
        let s = 0.3;
        let shrunk = big.shrink(anchor, s).unwrap();
        let expect = anchor + (big.point(0.0) - anchor) * s;
        assert_eq!(shrunk.point(0.0), expect);
        assert!(matches!(big.shrink(anchor, 0.0), Err(ModelError::ScaleOutOfRange(_))));
        assert!(matches!(big.shrink(anchor, 1.5), Err(ModelError::ScaleOutOfRange(_))));
    }

    #[test]
    fn invalid_loops() {
        assert!(LoopSpec::circle(Point::new(0.0, 0.0), 0.0).is_err());
        assert!(LoopSpec::ellipse(Point::new(0.0, 0.0), (1.0, -1.0)).is_err());
        assert!(LoopSpec::rectangle((0.0, 1.0), (0.0, 1.0), 0.6).is_err());
        let bowtie = [Point::new(0.0, 0.0), Point::new(1.0, 1.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
        assert!(LoopSpec::polygon(&bowtie, 0.01).is_err());
        assert!(LoopSpec::polygon(&bowtie[..2], 0.01).is_err());
    }
}

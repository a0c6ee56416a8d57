//! Smooth monotone reparametrization `φ` with `φ(t + 1) = φ(t) + 1` that maps
//! `[1/3, 2/3]` into a chosen window `[t* − ε/2, t* + ε/2]`.
//!
//! `φ` is the integral of a piecewise-constant slope whose jumps are blended
//! by a C^∞ smoothstep, normalized so that one period advances by exactly 1.

const KNOTS: [f64; 4] = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];
const GAUSS_NODES: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GAUSS_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];
/// Panels per blend window for the tabulated integral.
const PANELS: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct Warp {
    slopes: [f64; 3],
    delta: f64,
    /// Breakpoints in `[0, 1]` and the unnormalized integral at each.
    table: Vec<(f64, f64)>,
    total: f64,
}

impl Warp {
    /// Piecewise-linear knots `(0,0), (1/3, t*−ε/2), (2/3, t*+ε/2), (1,1)`.
    pub fn new(t_star: f64, eps: f64) -> Self {
        let lo = t_star - eps / 2.0;
        let hi = t_star + eps / 2.0;
        assert!(0.0 < lo && lo < hi && hi < 1.0, "window must lie inside (0, 1)");
        let slopes = [3.0 * lo, 3.0 * (hi - lo), 3.0 * (1.0 - hi)];
        // Blending shifts φ at a knot by at most |jump|·δ/2 ≤ 1.5δ, which must
        // stay inside the ε/2 margin around the plateau image.
        let delta = (eps / 4.0).min(0.05);
        let mut w = Self {
            slopes,
            delta,
            table: Vec::new(),
            total: 1.0,
        };
        w.tabulate();
        w
    }

    fn tabulate(&mut self) {
        let d = self.delta;
        let mut breaks = vec![0.0];
        for &k in &KNOTS {
            for j in 0..=PANELS {
                let u = k - d + 2.0 * d * j as f64 / PANELS as f64;
                if u > 0.0 && u < 1.0 {
                    breaks.push(u);
                }
            }
        }
        breaks.push(1.0);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let mut acc = 0.0;
        let mut table = vec![(0.0, 0.0)];
        for pair in breaks.windows(2) {
            acc += self.gauss(pair[0], pair[1]);
            table.push((pair[1], acc));
        }
        self.total = acc;
        self.table = table;
    }

    fn gauss(&self, a: f64, b: f64) -> f64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        GAUSS_NODES
            .iter()
            .zip(GAUSS_WEIGHTS)
            .map(|(x, w)| w * self.raw_slope(mid + half * x))
            .sum::<f64>()
            * half
    }

    /// Blended slope for `u ∈ [0, 1]`, before normalization.
    fn raw_slope(&self, u: f64) -> f64 {
        let d = self.delta;
        let s = &self.slopes;
        // Jumps at 0 ≡ 1 (s2 → s0), 1/3 (s0 → s1), 2/3 (s1 → s2).
        let mut base = if u < KNOTS[1] {
            s[0]
        } else if u < KNOTS[2] {
            s[1]
        } else {
            s[2]
        };
        let jumps = [
            (KNOTS[0], s[2], s[0]),
            (KNOTS[1], s[0], s[1]),
            (KNOTS[2], s[1], s[2]),
            (KNOTS[3], s[2], s[0]),
        ];
        for (k, left, right) in jumps {
            let z = (u - k) / d;
            if z.abs() < 1.0 {
                base = left + (right - left) * smoothstep(z);
            }
        }
        base
    }

    /// `φ(t)`, exact at integers.
    pub fn value(&self, t: f64) -> f64 {
        let floor = t.floor();
        let u = t - floor;
        floor + self.integral(u) / self.total
    }

    pub fn derivative(&self, t: f64) -> f64 {
        self.raw_slope(t - t.floor()) / self.total
    }

    fn integral(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        let idx = self.table.partition_point(|(b, _)| *b <= u);
        let (b0, v0) = self.table[idx - 1];
        if b0 == u {
            return v0;
        }
        v0 + self.gauss(b0, u)
    }
}

/// C^∞ step from 0 at `z = −1` to 1 at `z = 1`, with `S(−z) = 1 − S(z)`.
fn smoothstep(z: f64) -> f64 {
    let h = |s: f64| if s > 0.0 { (-1.0 / s).exp() } else { 0.0 };
    let a = h(1.0 + z);
    let b = h(1.0 - z);
    a / (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_exact() {
        let w = Warp::new(0.125, 0.075);
        assert_eq!(w.value(0.0), 0.0);
        assert_eq!(w.value(1.0), 1.0);
        assert_eq!(w.value(-1.0), -1.0);
        assert_eq!(w.value(3.0), 3.0);
    }

    #[test]
    fn shift_by_one_and_monotone() {
        let w = Warp::new(0.6, 0.2);
        let mut prev = w.value(-0.5);
        for k in 1..=3000 {
            let t = -0.5 + k as f64 / 1000.0;
            let v = w.value(t);
            assert!(v > prev);
            prev = v;
            assert!((w.value(t + 1.0) - w.value(t) - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn plateau_maps_into_window() {
        let (t_star, eps) = (0.125, 0.075);
        let w = Warp::new(t_star, eps);
        for k in 0..=300 {
            let u = 1.0 / 3.0 + k as f64 / 900.0;
            let v = w.value(u);
            assert!((v - t_star).abs() <= eps, "φ({u}) = {v}");
        }
    }

    #[test]
    fn derivative_matches_values() {
        let w = Warp::new(0.3, 0.1);
        for k in 0..200 {
            let t = (k as f64 + 0.5) / 200.0;
            let h = 1e-5;
            let fd = (w.value(t + h) - w.value(t - h)) / (2.0 * h);
            assert!((fd - w.derivative(t)).abs() < 1e-6, "t={t}: {fd} vs {}", w.derivative(t));
        }
    }

    #[test]
    fn smoothstep_symmetry() {
        for k in 0..=20 {
            let z = -1.0 + k as f64 / 10.0;
            assert!((smoothstep(-z) - (1.0 - smoothstep(z))).abs() < 1e-15);
        }
    }
}

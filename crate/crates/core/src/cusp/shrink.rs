use std::f64::consts::PI;

use super::CuspError;
use crate::flow::{integrate_loop, monodromy, wrap_phase, FlowOptions, MonodromyOptions};
use crate::model::{LoopSpec, ParamMatrixFn, Point};

#[derive(Debug, Clone, PartialEq)]
pub struct ShrinkOptions {
    /// Strictly decreasing, in `(0, 1]`.
    pub scales: Vec<f64>,
    /// Number of smallest scales used in the fit.
    pub fit_points: usize,
    /// Deviations all below this skip the fit.
    pub exact_tol: f64,
    pub flow: FlowOptions,
    pub monodromy: MonodromyOptions,
}

impl Default for ShrinkOptions {
    fn default() -> Self {
        Self {
            scales: (1..=7).map(|k| 0.5f64.powi(k)).collect(),
            fit_points: 4,
            exact_tol: 1e-8,
            flow: FlowOptions::default(),
            monodromy: MonodromyOptions::default(),
        }
    }
}

/// Limit the phases are compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    /// The loops swap a pair of eigenvalues; phases tend to `π/2 mod π`.
    Gcp,
    /// The loops leave every eigenvalue in place; phases tend to `0 mod 2π`.
    Regular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShrinkClass {
    GcpLike,
    Regular,
    Inconclusive,
}

impl ShrinkClass {
    pub fn as_str(self) -> &'static str {
        match self {
            ShrinkClass::GcpLike => "gcp-like",
            ShrinkClass::Regular => "regular",
            ShrinkClass::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShrinkScan {
    pub anchor: Point,
    pub scales: Vec<f64>,
    pub permutations: Vec<Vec<usize>>,
    /// `phases[k][j]` is `α_j` at `scales[k]`.
    pub phases: Vec<Vec<f64>>,
    pub hypothesis: Hypothesis,
    /// `|α_j − limit|` per scale, reduced modulo the limit's period.
    pub deviations: Vec<Vec<f64>>,
    /// Slope of `log dev_j` against `log s` over the smallest scales, absent
    /// when the scan is exact or a deviation there is zero.
    pub exponents: Vec<Option<f64>>,
    /// All deviations below `exact_tol`.
    pub exact: bool,
    pub class: ShrinkClass,
}

/// Least-squares slope of `y` against `x`.
fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn deviation(alpha: f64, hypothesis: Hypothesis) -> f64 {
    match hypothesis {
        Hypothesis::Gcp => {
            // Distance from α to the nearest odd multiple of π/2.
            let r = (alpha - PI / 2.0).rem_euclid(PI);
            r.min(PI - r)
        }
        Hypothesis::Regular => wrap_phase(alpha).abs(),
    }
}

/// Phases of the loops `ξ₀ + s(γ − ξ₀)` and their rate of approach to the
/// limit predicted by the permutation.
///
/// Classification: `gcp-like` when the loops swap one pair and either the
/// phases sit at `π/2 mod π` to within `exact_tol` or every exponent lies in
/// `[0.35, 0.65]`; `regular` when the permutation is trivial and either the
/// phases vanish to within `exact_tol` or every exponent is at least `0.85`.
pub fn shrink_scan(f: &ParamMatrixFn, anchor: Point, base: &LoopSpec, opts: &ShrinkOptions) -> Result<ShrinkScan, CuspError> {
    let scales = &opts.scales;
    if scales.is_empty() || scales.iter().any(|s| !(*s > 0.0 && *s <= 1.0)) {
        return Err(CuspError::InvalidScales("scales must lie in (0, 1]".into()));
    }
    if scales.windows(2).any(|w| w[1] >= w[0]) {
        return Err(CuspError::InvalidScales("scales must be strictly decreasing".into()));
    }
    if opts.fit_points < 2 || opts.fit_points > scales.len() {
        return Err(CuspError::InvalidScales(format!(
            "fit needs between 2 and {} points, got {}",
            scales.len(),
            opts.fit_points
        )));
    }

    let mut permutations = Vec::with_capacity(scales.len());
    let mut phases = Vec::with_capacity(scales.len());
    for &s in scales {
        let gamma = base.shrink(anchor, s)?;
        let path = integrate_loop(f, &gamma, 0.0, 1, &opts.flow)?;
        let m = monodromy(&path, &opts.monodromy)?;
        permutations.push(m.permutation);
        phases.push(m.phases);
    }

    let moved = |p: &Vec<usize>| p.iter().enumerate().filter(|(r, c)| r != *c).count();
    let swaps_pair = permutations
        .iter()
        .all(|p| moved(p) == 2 && p.iter().enumerate().all(|(r, &c)| p[c] == r));
    let trivial = permutations.iter().all(|p| moved(p) == 0);
    let hypothesis = if swaps_pair { Hypothesis::Gcp } else { Hypothesis::Regular };

    // Only the swapped pair carries the π/2 limit; other indices tend to 0.
    let deviations: Vec<Vec<f64>> = phases
        .iter()
        .zip(&permutations)
        .map(|(row, perm)| {
            row.iter()
                .enumerate()
                .map(|(j, &a)| {
                    let h = if hypothesis == Hypothesis::Gcp && perm[j] != j {
                        Hypothesis::Gcp
                    } else {
                        Hypothesis::Regular
                    };
                    deviation(a, h)
                })
                .collect()
        })
        .collect();

    let exact = deviations.iter().flatten().all(|&d| d < opts.exact_tol);
    let n = phases[0].len();
    let tail = scales.len() - opts.fit_points;
    let log_s: Vec<f64> = scales[tail..].iter().map(|s| s.ln()).collect();
    let exponents: Vec<Option<f64>> = (0..n)
        .map(|j| {
            let ys: Vec<f64> = deviations[tail..].iter().map(|d| d[j]).collect();
            (!exact && ys.iter().all(|&y| y > 0.0)).then(|| slope(&log_s, &ys.iter().map(|y| y.ln()).collect::<Vec<_>>()))
        })
        .collect();

    let pair: Vec<usize> = match hypothesis {
        Hypothesis::Gcp => (0..n).filter(|&j| permutations[0][j] != j).collect(),
        Hypothesis::Regular => (0..n).collect(),
    };
    let fitted = |lo: f64, hi: f64| pair.iter().all(|&j| exponents[j].is_some_and(|e| e >= lo && e <= hi));
    let class = match hypothesis {
        Hypothesis::Gcp if exact || fitted(0.35, 0.65) => ShrinkClass::GcpLike,
        Hypothesis::Regular if trivial && (exact || fitted(0.85, f64::INFINITY)) => ShrinkClass::Regular,
        _ => ShrinkClass::Inconclusive,
    };

    Ok(ShrinkScan {
        anchor,
        scales: scales.clone(),
        permutations,
        phases,
        hypothesis,
        deviations,
        exponents,
        exact,
        class,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Builtin;

    #[test]
    fn slope_of_power_law() {
        let x: Vec<f64> = [0.1f64, 0.05, 0.025].iter().map(|v| v.ln()).collect();
        let y: Vec<f64> = [0.1f64, 0.05, 0.025].iter().map(|v| (3.0 * v.sqrt()).ln()).collect();
        assert!((slope(&x, &y) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn deviations_reduce_correctly() {
        assert!(deviation(-PI / 2.0, Hypothesis::Gcp) < 1e-15);
        assert!(deviation(3.0 * PI / 2.0, Hypothesis::Gcp) < 1e-15);
        assert!((deviation(0.0, Hypothesis::Gcp) - PI / 2.0).abs() < 1e-15);
        assert!(deviation(2.0 * PI, Hypothesis::Regular) < 1e-15);
    }

    #[test]
    fn sqrt_is_exactly_gcp_like() {
        let f = ParamMatrixFn::builtin(Builtin::Sqrt);
        let base = LoopSpec::circle(Point::new(0.0, 0.0), 1.0).unwrap();
        let scan = shrink_scan(&f, Point::new(0.0, 0.0), &base, &ShrinkOptions::default()).unwrap();
        assert_eq!(scan.hypothesis, Hypothesis::Gcp);
        assert!(scan.exact);
        assert_eq!(scan.class, ShrinkClass::GcpLike);
    }

    #[test]
    fn rejects_bad_scales() {
        let f = ParamMatrixFn::builtin(Builtin::Sqrt);
        let base = LoopSpec::circle(Point::new(0.0, 0.0), 1.0).unwrap();
        let opts = ShrinkOptions {
            scales: vec![0.5, 0.5],
            fit_points: 2,
            ..ShrinkOptions::default()
        };
        assert!(matches!(shrink_scan(&f, Point::new(0.0, 0.0), &base, &opts), Err(CuspError::InvalidScales(_))));
    }
}

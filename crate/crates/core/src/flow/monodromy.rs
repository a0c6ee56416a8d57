use std::f64::consts::PI;

use num_complex::Complex64;

use super::ode::EigenPath;
use super::FlowError;
use crate::linalg::{ComplexMatrix, Lu};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonodromyOptions {
    /// Second-largest over largest modulus allowed in any row of `V(0)⁻¹V(1)`.
    pub ambiguity_ratio: f64,
    pub pattern_tol: f64,
    pub sum_tol: f64,
    pub det_tol: f64,
}

impl Default for MonodromyOptions {
    fn default() -> Self {
        Self {
            ambiguity_ratio: 0.2,
            pattern_tol: 1e-6,
            sum_tol: 1e-6,
            det_tol: 1e-6,
        }
    }
}

/// `V(0)⁻¹ V(1) = Π Φ`.
///
/// `permutation[r] = c` says the `c`-th column after one loop is a phase
/// multiple of the `r`-th column at the start, so `λ_c(1) = λ_r(0)` and
/// `v_c(1) = e^{iα_c} v_r(0)` with `α_c = phases[c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Monodromy {
    pub permutation: Vec<usize>,
    /// In `(−π, π]`.
    pub phases: Vec<f64>,
    /// `‖M − ΠΦ‖_F` with `|Φ_jj| = 1`.
    pub pattern_residual: f64,
    /// `|det V(1) − det V(0)|`.
    pub det_drift: f64,
    /// Largest `| |M_rc| − ‖v_c(1)‖/‖v_r(0)‖ |` over retained entries.
    pub modulus_defect: f64,
    /// Largest second-over-first modulus ratio across rows.
    pub max_row_ratio: f64,
    /// Largest `|λ_c(1) − λ_r(0)|` over retained entries.
    pub eigenvalue_mismatch: f64,
}

impl Monodromy {
    pub fn dim(&self) -> usize {
        self.permutation.len()
    }

    pub fn is_identity(&self) -> bool {
        self.permutation.iter().enumerate().all(|(r, &c)| r == c)
    }

    /// Sum of the phases reduced to `(−π/2, π/2]`.
    pub fn phase_sum_mod_pi(&self) -> f64 {
        circular_mod(self.phases.iter().sum(), PI)
    }

    /// Sum of the phases reduced to `(−π, π]`.
    pub fn phase_sum_mod_2pi(&self) -> f64 {
        wrap_phase(self.phases.iter().sum())
    }

    /// Cycle decomposition, each cycle starting at its smallest index.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let n = self.dim();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            let mut cyc = vec![s];
            seen[s] = true;
            let mut k = self.permutation[s];
            while k != s {
                seen[k] = true;
                cyc.push(k);
                k = self.permutation[k];
            }
            out.push(cyc);
        }
        out
    }

    /// Lengths of the nontrivial cycles in decreasing order, e.g. `[2, 2]` for
    /// two disjoint transpositions.
    pub fn cycle_type(&self) -> Vec<usize> {
        let mut lens: Vec<usize> = self.cycles().iter().map(Vec::len).filter(|&l| l > 1).collect();
        lens.sort_unstable_by(|a, b| b.cmp(a));
        lens
    }
}

/// Reduces `x` to `(−π, π]`.
pub fn wrap_phase(x: f64) -> f64 {
    circular_mod(x, 2.0 * PI)
}

/// Reduces `x` to `(−m/2, m/2]`.
pub(crate) fn circular_mod(x: f64, m: f64) -> f64 {
    let r = x - m * (x / m).round();
    if r <= -m / 2.0 {
        r + m
    } else if r > m / 2.0 {
        r - m
    } else {
        r
    }
}

/// Monodromy over the first full period of `path`.
pub fn monodromy(path: &EigenPath, opts: &MonodromyOptions) -> Result<Monodromy, FlowError> {
    let end = path
        .at_period(1)
        .ok_or_else(|| FlowError::InvalidOptions("path does not record a sample one period after its start".into()))?;
    let start = path.first();
    monodromy_between(
        &start.vectors,
        &start.values,
        &end.vectors,
        &end.values,
        opts,
    )
}

pub fn monodromy_between(
    v0: &ComplexMatrix,
    values0: &[Complex64],
    v1: &ComplexMatrix,
    values1: &[Complex64],
    opts: &MonodromyOptions,
) -> Result<Monodromy, FlowError> {
    let n = v0.rows();
    let lu0 = Lu::factor(v0)?;
    let lu1 = Lu::factor(v1)?;
    let mut m = v1.clone();
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..n {
        col.copy_from_slice(&v1.column(j));
        lu0.solve_in_place(&mut col);
        m.set_column(j, &col);
    }

    let mut permutation = vec![0; n];
    let mut max_row_ratio: f64 = 0.0;
    for r in 0..n {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| m[(r, b)].norm().total_cmp(&m[(r, a)].norm()));
        let largest = m[(r, order[0])].norm();
        let second = if n > 1 { m[(r, order[1])].norm() } else { 0.0 };
        let ratio = second / largest;
        if !(ratio <= opts.ambiguity_ratio) {
            return Err(FlowError::AmbiguousPattern { row: r, ratio });
        }
        max_row_ratio = max_row_ratio.max(ratio);
        permutation[r] = order[0];
    }
    let mut hit = vec![false; n];
    for &c in &permutation {
        if std::mem::replace(&mut hit[c], true) {
            return Err(FlowError::NotPermutation);
        }
    }

    let norms = |v: &ComplexMatrix, j: usize| (0..n).map(|i| v[(i, j)].norm_sqr()).sum::<f64>().sqrt();
    let mut phases = vec![0.0; n];
    let mut pattern = ComplexMatrix::zeros(n, n);
    let mut modulus_defect: f64 = 0.0;
    let mut eigenvalue_mismatch: f64 = 0.0;
    for (r, &c) in permutation.iter().enumerate() {
        let entry = m[(r, c)];
        phases[c] = wrap_phase(entry.arg());
        pattern[(r, c)] = Complex64::from_polar(1.0, phases[c]);
        let ratio = norms(v1, c) / norms(v0, r);
        modulus_defect = modulus_defect.max((entry.norm() - ratio).abs());
        eigenvalue_mismatch = eigenvalue_mismatch.max((values1[c] - values0[r]).norm());
    }
    let pattern_residual = m.distance(&pattern);
    let det_drift = (lu1.determinant() - lu0.determinant()).norm();
    let mono = Monodromy {
        permutation,
        phases,
        pattern_residual,
        det_drift,
        modulus_defect,
        max_row_ratio,
        eigenvalue_mismatch,
    };

    if !(pattern_residual <= opts.pattern_tol) {
        return Err(FlowError::Invariant(format!("pattern residual {pattern_residual:e}")));
    }
    if !(det_drift <= opts.det_tol) {
        return Err(FlowError::Invariant(format!("determinant drift {det_drift:e}")));
    }
    let sum_dev = mono.phase_sum_mod_pi().abs();
    if !(sum_dev <= opts.sum_tol) {
        return Err(FlowError::Invariant(format!("phase sum deviates from 0 mod π by {sum_dev:e}")));
    }
    Ok(mono)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn wrapping() {
        assert_eq!(wrap_phase(-PI), PI);
        assert_eq!(wrap_phase(PI), PI);
        assert!((wrap_phase(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert!((circular_mod(PI, PI)).abs() < 1e-15);
        assert!((circular_mod(PI / 2.0, PI) - PI / 2.0).abs() < 1e-15);
        assert!((circular_mod(-PI / 2.0, PI) - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn swap_with_phases() {
        let v0 = ComplexMatrix::identity(2);
        let a = PI / 2.0;
        // v_1(1) = e^{iα} v_0(0), v_0(1) = e^{iα} v_1(0).
        let v1 = ComplexMatrix::from_rows(&[vec![c(0.0, 0.0), Complex64::from_polar(1.0, a)], vec![Complex64::from_polar(1.0, a), c(0.0, 0.0)]]).unwrap();
        let vals0 = [c(1.0, 0.0), c(-1.0, 0.0)];
        let vals1 = [c(-1.0, 0.0), c(1.0, 0.0)];
        let m = monodromy_between(&v0, &vals0, &v1, &vals1, &MonodromyOptions { det_tol: 10.0, ..Default::default() }).unwrap();
        assert_eq!(m.permutation, vec![1, 0]);
        assert!((m.phases[0] - a).abs() < 1e-15 && (m.phases[1] - a).abs() < 1e-15);
        assert_eq!(m.cycle_type(), vec![2]);
        assert!(m.phase_sum_mod_pi().abs() < 1e-15);
        assert!(m.eigenvalue_mismatch < 1e-15);
    }

    #[test]
    fn ambiguous_rows_are_rejected() {
        let v0 = ComplexMatrix::identity(2);
        let v1 = ComplexMatrix::from_real_rows(&[&[0.8, 0.6], &[-0.6, 0.8]]).unwrap();
        let vals = [c(1.0, 0.0), c(-1.0, 0.0)];
        assert!(matches!(
            monodromy_between(&v0, &vals, &v1, &vals, &MonodromyOptions::default()),
            Err(FlowError::AmbiguousPattern { row: 0, .. })
        ));
    }

    #[test]
    fn cycles_of_three_cycle() {
        let m = Monodromy {
            permutation: vec![2, 0, 1, 3],
            phases: vec![0.0; 4],
            pattern_residual: 0.0,
            det_drift: 0.0,
            modulus_defect: 0.0,
            max_row_ratio: 0.0,
            eigenvalue_mismatch: 0.0,
        };
        assert_eq!(m.cycles(), vec![vec![0, 2, 1], vec![3]]);
        assert_eq!(m.cycle_type(), vec![3]);
        assert!(!m.is_identity());
    }
}

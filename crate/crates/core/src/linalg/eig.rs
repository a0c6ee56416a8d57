//! Eigendecomposition of small dense complex matrices with simple spectrum.
//!
//! The 2x2 case uses the closed form through trace and discriminant. Larger
//! matrices go through Householder reduction to Hessenberg form, shifted QR
//! sweeps for the eigenvalues, and inverse iteration for the eigenvectors.

use std::cmp::Ordering;

use num_complex::Complex64;

use super::lu::Lu;
use super::{ComplexMatrix, LinalgError};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigOptions {
    /// Residual bound, relative to `max(1, ‖A‖_F)`.
    pub tol: f64,
    /// Minimum eigenvalue gap, relative to `‖A‖_F`.
    pub gap_tol: f64,
    /// Largest accepted dimension.
    pub max_dim: usize,
    /// QR sweeps allowed per eigenvalue before giving up.
    pub max_sweeps_per_eigenvalue: usize,
    /// Largest accepted 1-norm condition number of the eigenvector matrix.
    pub cond_max: f64,
}

impl Default for EigOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            gap_tol: 1e-10,
            max_dim: 8,
            max_sweeps_per_eigenvalue: 60,
            cond_max: 1e12,
        }
    }
}

/// `A V = V diag(values)` with unit-norm columns whose first significant
/// component is real and positive.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<Complex64>,
    pub vectors: ComplexMatrix,
    pub residual: f64,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn min_gap(&self) -> f64 {
        min_gap(&self.values)
    }
}

/// Eigendecomposition with default options and residual tolerance `tol`.
pub fn eig_small(a: &ComplexMatrix, tol: f64) -> Result<EigenDecomposition, LinalgError> {
    eig_small_with(
        a,
        &EigOptions {
            tol,
            ..EigOptions::default()
        },
    )
}

pub fn eig_small_with(a: &ComplexMatrix, opts: &EigOptions) -> Result<EigenDecomposition, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let n = a.rows();
    if n > opts.max_dim {
        return Err(LinalgError::TooLarge {
            dim: n,
            max: opts.max_dim,
        });
    }
    let scale = a.frobenius_norm();

    let mut values = if n == 2 {
        eigenvalues_2x2(a)
    } else {
        eigenvalues_qr(a, opts.max_sweeps_per_eigenvalue)?
    };
    values.sort_by(|x, y| descending(x, y));

    let gap = min_gap(&values);
    if n > 1 && gap <= opts.gap_tol * scale {
        return Err(LinalgError::DegenerateSpectrum { gap });
    }

    let mut columns = Vec::with_capacity(n);
    for &lambda in &values {
        let v = if n == 2 {
            eigenvector_2x2(a, lambda).map_or_else(|| inverse_iteration(a, lambda, scale), Ok)?
        } else {
            inverse_iteration(a, lambda, scale)?
        };
        columns.push(normalize_gauge(v));
    }
    let vectors = ComplexMatrix::from_columns(&columns);

    let residual = eigen_residual(a, &vectors, &values);
    let bound = opts.tol * scale.max(1.0);
    if residual > bound {
        return Err(LinalgError::ResidualTooLarge { residual, bound });
    }
    let condition = Lu::factor(&vectors)
        .map(|lu| lu.condition())
        .unwrap_or(f64::INFINITY);
    if !(condition <= opts.cond_max) {
        return Err(LinalgError::IllConditionedEigenvectors { condition });
    }

    Ok(EigenDecomposition {
        values,
        vectors,
        residual,
    })
}

/// `‖A V − V diag(values)‖_F`.
pub fn eigen_residual(a: &ComplexMatrix, vectors: &ComplexMatrix, values: &[Complex64]) -> f64 {
    let av = a.mul_unchecked(vectors);
    let n = a.rows();
    let mut acc = 0.0;
    for i in 0..n {
        for (j, &lambda) in values.iter().enumerate() {
            acc += (av[(i, j)] - vectors[(i, j)] * lambda).norm_sqr();
        }
    }
    acc.sqrt()
}

pub fn min_gap(values: &[Complex64]) -> f64 {
    let mut gap = f64::INFINITY;
    for (j, a) in values.iter().enumerate() {
        for b in &values[j + 1..] {
            gap = gap.min((a - b).norm());
        }
    }
    gap
}

/// Scales `v` to unit 2-norm and rotates its first significant component
/// onto the positive real axis.
pub fn normalize_gauge(mut v: Vec<Complex64>) -> Vec<Complex64> {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return v;
    }
    for z in v.iter_mut() {
        *z /= norm;
    }
    if let Some(lead) = v.iter().copied().find(|z| z.norm() > 1e-10) {
        let rot = lead.conj() / lead.norm();
        for z in v.iter_mut() {
            *z *= rot;
        }
    }
    v
}

fn descending(x: &Complex64, y: &Complex64) -> Ordering {
    y.re.total_cmp(&x.re).then(y.im.total_cmp(&x.im))
}

fn eigenvalues_2x2(a: &ComplexMatrix) -> Vec<Complex64> {
    let (p, q, r, s) = (a[(0, 0)], a[(0, 1)], a[(1, 0)], a[(1, 1)]);
    let disc = (p - s) * (p - s) + 4.0 * q * r;
    let root = disc.sqrt();
    let half_trace = (p + s) * 0.5;
    vec![half_trace + root * 0.5, half_trace - root * 0.5]
}

/// Either `[b, λ−a]` or `[λ−d, c]`, whichever is larger.
fn eigenvector_2x2(a: &ComplexMatrix, lambda: Complex64) -> Option<Vec<Complex64>> {
    let (p, q, r, s) = (a[(0, 0)], a[(0, 1)], a[(1, 0)], a[(1, 1)]);
    let first = vec![q, lambda - p];
    let second = vec![lambda - s, r];
    let n1 = first[0].norm_sqr() + first[1].norm_sqr();
    let n2 = second[0].norm_sqr() + second[1].norm_sqr();
    let tiny = 1e-28 * (a.frobenius_norm().powi(2)).max(1e-300);
    match (n1 > tiny, n2 > tiny) {
        (false, false) => None,
        _ if n1 >= n2 => Some(first),
        _ => Some(second),
    }
}

fn eigenvalues_qr(a: &ComplexMatrix, max_sweeps: usize) -> Result<Vec<Complex64>, LinalgError> {
    let n = a.rows();
    if n == 1 {
        return Ok(vec![a[(0, 0)]]);
    }
    let mut h = a.clone();
    reduce_to_hessenberg(&mut h);

    let mut values = vec![ZERO; n];
    let mut hi = n - 1;
    let mut sweeps = 0usize;
    loop {
        if hi == 0 {
            values[0] = h[(0, 0)];
            break;
        }
        // Deflate negligible subdiagonals from the bottom of the active block.
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let diag = h[(lo, lo)].norm() + h[(lo - 1, lo - 1)].norm();
            if sub <= f64::EPSILON * diag.max(f64::MIN_POSITIVE) {
                h[(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            values[hi] = h[(hi, hi)];
            hi -= 1;
            sweeps = 0;
            continue;
        }
        sweeps += 1;
        if sweeps > max_sweeps {
            return Err(LinalgError::NoConvergence {
                iterations: sweeps,
            });
        }
        let shift = if sweeps % 11 == 0 {
            // Exceptional shift to break cycles.
            h[(hi, hi)] + Complex64::new(0.75, 0.25) * h[(hi, hi - 1)].norm()
        } else {
            wilkinson_shift(&h, hi)
        };
        qr_sweep(&mut h, lo, hi, shift);
    }
    Ok(values)
}

fn wilkinson_shift(h: &ComplexMatrix, hi: usize) -> Complex64 {
    let a = h[(hi - 1, hi - 1)];
    let b = h[(hi - 1, hi)];
    let c = h[(hi, hi - 1)];
    let d = h[(hi, hi)];
    let half = (a - d) * 0.5;
    let root = (half * half + b * c).sqrt();
    let mid = (a + d) * 0.5;
    let (m1, m2) = (mid + root, mid - root);
    if (m1 - d).norm() <= (m2 - d).norm() {
        m1
    } else {
        m2
    }
}

/// One explicit single-shift QR step on the active block `lo..=hi`.
fn qr_sweep(h: &mut ComplexMatrix, lo: usize, hi: usize, shift: Complex64) {
    for k in lo..=hi {
        h[(k, k)] -= shift;
    }
    let mut rotations = Vec::with_capacity(hi - lo);
    for k in lo..hi {
        let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
        for j in k..=hi {
            let x = h[(k, j)];
            let y = h[(k + 1, j)];
            h[(k, j)] = x * c + s * y;
            h[(k + 1, j)] = -s.conj() * x + y * c;
        }
        rotations.push((c, s));
    }
    for (offset, &(c, s)) in rotations.iter().enumerate() {
        let k = lo + offset;
        for i in lo..=(k + 2).min(hi) {
            let x = h[(i, k)];
            let y = h[(i, k + 1)];
            h[(i, k)] = x * c + y * s.conj();
            h[(i, k + 1)] = -x * s + y * c;
        }
    }
    for k in lo..=hi {
        h[(k, k)] += shift;
    }
}

/// Rotation `[[c, s], [−s̄, c]]` mapping `(a, b)` to `(r, 0)`.
fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    let an = a.norm();
    let bn = b.norm();
    if bn == 0.0 {
        return (1.0, ZERO);
    }
    if an == 0.0 {
        return (0.0, b.conj() / bn);
    }
    let r = an.hypot(bn);
    (an / r, (a / an) * b.conj() / r)
}

fn reduce_to_hessenberg(h: &mut ComplexMatrix) {
    let n = h.rows();
    for k in 0..n.saturating_sub(2) {
        let mut v: Vec<Complex64> = ((k + 1)..n).map(|i| h[(i, k)]).collect();
        let xnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let phase = if v[0].norm() > 0.0 { v[0] / v[0].norm() } else { ONE };
        v[0] += phase * xnorm;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in v.iter_mut() {
            *z /= vnorm;
        }
        // H <- (I - 2vv*) H
        for j in 0..n {
            let mut dot = ZERO;
            for (idx, vi) in v.iter().enumerate() {
                dot += vi.conj() * h[(k + 1 + idx, j)];
            }
            for (idx, vi) in v.iter().enumerate() {
                h[(k + 1 + idx, j)] -= *vi * dot * 2.0;
            }
        }
        // H <- H (I - 2vv*)
        for i in 0..n {
            let mut dot = ZERO;
            for (idx, vi) in v.iter().enumerate() {
                dot += h[(i, k + 1 + idx)] * vi;
            }
            for (idx, vi) in v.iter().enumerate() {
                h[(i, k + 1 + idx)] -= dot * vi.conj() * 2.0;
            }
        }
        for i in (k + 2)..n {
            h[(i, k)] = ZERO;
        }
    }
}

fn inverse_iteration(a: &ComplexMatrix, lambda: Complex64, scale: f64) -> Result<Vec<Complex64>, LinalgError> {
    let n = a.rows();
    let floor = f64::EPSILON * scale.max(f64::MIN_POSITIVE);
    let mut shifted = a.clone();
    for i in 0..n {
        shifted[(i, i)] -= lambda;
    }
    // Perturb the shift slightly so the factorization is never exactly singular.
    let lu = match Lu::factor(&shifted) {
        Ok(lu) => lu,
        Err(_) => {
            for i in 0..n {
                shifted[(i, i)] += Complex64::new(floor * 16.0, floor * 8.0);
            }
            Lu::factor(&shifted).map_err(|_| LinalgError::NoConvergence { iterations: 0 })?
        }
    };
    let mut x: Vec<Complex64> = (0..n)
        .map(|k| Complex64::new(1.0 + 0.37 * k as f64, 0.11 * (k as f64 + 1.0)))
        .collect();
    for _ in 0..3 {
        lu.solve_in_place(&mut x);
        let norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(LinalgError::NoConvergence { iterations: 3 });
        }
        for z in x.iter_mut() {
            *z /= norm;
        }
    }
    Ok(x)
}

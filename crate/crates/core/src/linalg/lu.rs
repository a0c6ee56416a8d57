use num_complex::Complex64;

use super::{ComplexMatrix, LinalgError};

/// Reciprocal condition below which a matrix counts as singular.
const RCOND_SINGULAR: f64 = 1e-14;

/// Partial-pivot LU factorization `P A = L U` of a square complex matrix.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: Vec<Complex64>,
    pivots: Vec<usize>,
    sign: f64,
    norm_one: f64,
}

impl Lu {
    pub fn factor(a: &ComplexMatrix) -> Result<Self, LinalgError> {
        if !a.is_square() {
            return Err(LinalgError::NotSquare {
                rows: a.rows(),
                cols: a.cols(),
            });
        }
        let n = a.rows();
        let mut lu = a.as_slice().to_vec();
        let mut pivots: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        let norm_one = one_norm(a.as_slice(), n);

        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[i * n + k].norm()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax == 0.0 {
                return Err(LinalgError::SingularMatrix {
                    condition: f64::INFINITY,
                });
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                pivots.swap(k, p);
                sign = -sign;
            }
            let pivot = lu[k * n + k];
            for i in (k + 1)..n {
                let factor = lu[i * n + k] / pivot;
                lu[i * n + k] = factor;
                if factor == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in (k + 1)..n {
                    let u = lu[k * n + j];
                    lu[i * n + j] -= factor * u;
                }
            }
        }
        Ok(Self {
            n,
            lu,
            pivots,
            sign,
            norm_one,
        })
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn determinant(&self) -> Complex64 {
        let n = self.n;
        (0..n).fold(Complex64::new(self.sign, 0.0), |acc, i| acc * self.lu[i * n + i])
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [Complex64]) {
        let n = self.n;
        debug_assert_eq!(b.len(), n);
        let permuted: Vec<Complex64> = self.pivots.iter().map(|&p| b[p]).collect();
        b.copy_from_slice(&permuted);
        for i in 0..n {
            let mut acc = b[i];
            for j in 0..i {
                acc -= self.lu[i * n + j] * b[j];
            }
            b[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = b[i];
            for j in (i + 1)..n {
                acc -= self.lu[i * n + j] * b[j];
            }
            b[i] = acc / self.lu[i * n + i];
        }
    }

    /// Inverse, refusing matrices whose 1-norm condition estimate exceeds `1e14`.
    pub fn inverse(&self) -> Result<ComplexMatrix, LinalgError> {
        let inv = self.inverse_unchecked();
        let condition = self.norm_one * one_norm(inv.as_slice(), self.n);
        if !condition.is_finite() || condition * RCOND_SINGULAR > 1.0 {
            return Err(LinalgError::SingularMatrix { condition });
        }
        Ok(inv)
    }

    pub(crate) fn inverse_unchecked(&self) -> ComplexMatrix {
        let n = self.n;
        let mut inv = ComplexMatrix::zeros(n, n);
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            col.fill(Complex64::new(0.0, 0.0));
            col[j] = Complex64::new(1.0, 0.0);
            self.solve_in_place(&mut col);
            inv.set_column(j, &col);
        }
        inv
    }

    /// 1-norm condition number `‖A‖₁‖A⁻¹‖₁`.
    pub fn condition(&self) -> f64 {
        self.norm_one * one_norm(self.inverse_unchecked().as_slice(), self.n)
    }
}

fn one_norm(data: &[Complex64], n: usize) -> f64 {
    (0..n)
        .map(|j| (0..n).map(|i| data[i * n + j].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_well_conditioned(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
        let mut m = ComplexMatrix::identity(n).scale(c(n as f64, 0.0));
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] += c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
        m
    }

    #[test]
    fn diagonal_inverse() {
        let d = ComplexMatrix::from_diag(&[c(2.0, 0.0), c(0.0, 1.0)]);
        let inv = d.invert().unwrap();
        assert_eq!(inv[(0, 0)], c(0.5, 0.0));
        assert_eq!(inv[(1, 1)], c(0.0, -1.0));
        assert_eq!(inv[(0, 1)], c(0.0, 0.0));
        assert_eq!(ComplexMatrix::identity(3).invert().unwrap(), ComplexMatrix::identity(3));
    }

    #[test]
    fn random_inverse_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let a = random_well_conditioned(&mut rng, 4);
            let inv = a.invert().unwrap();
            let resid = a.multiply(&inv).unwrap().distance(&ComplexMatrix::identity(4));
            assert!(resid <= 1e-12, "residual {resid}");
        }
    }

    #[test]
    fn invert_twice_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..=6 {
            let a = random_well_conditioned(&mut rng, n);
            let back = a.invert().unwrap().invert().unwrap();
            assert!(back.distance(&a) <= 1e-10 * a.frobenius_norm());
        }
    }

    #[test]
    fn singular_reports_condition() {
        let a = ComplexMatrix::from_real_rows(&[&[1.0, 2.0], &[2.0, 4.0]]).unwrap();
        match a.invert() {
            Err(LinalgError::SingularMatrix { condition }) => assert!(condition > 1e14),
            other => panic!("expected singular error, got {other:?}"),
        }
        let nearly = ComplexMatrix::from_real_rows(&[&[1.0, 1.0], &[1.0, 1.0 + 1e-16]]).unwrap();
        assert!(matches!(nearly.invert(), Err(LinalgError::SingularMatrix { .. })));
    }

    #[test]
    fn determinant_of_permuted_triangular() {
        let a = ComplexMatrix::from_real_rows(&[&[0.0, 2.0], &[3.0, 1.0]]).unwrap();
        let det = a.determinant().unwrap();
        assert!((det - c(-6.0, 0.0)).norm() < 1e-15);
    }
}

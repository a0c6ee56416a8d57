//! Phases from the explicit eigenvector field of a 2x2 matrix function,
//! independent of the ODE.
//!
//! With `ṽ± = [(a−d)/2 ± √Δ/2; c]` and `w̃±ᵀ` the rows of `Ṽ⁻¹`, the phase is
//! `−∫ Im(w̃ᵀ ṽ̇) dt` plus a correction for the gauge of the start vectors.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::monodromy::wrap_phase;
use super::FlowError;
use crate::linalg::eig_small;
use crate::model::{Curve, ParamMatrixFn};

struct Node {
    fields: [[Complex64; 2]; 2],
    derivs: [[Complex64; 2]; 2],
    lambda: [Complex64; 2],
}

/// Phases in the index order of the dense solver at `γ(0)`, matching
/// [`super::integrate_loop`] with `start = 0`.
pub fn phase_by_quadrature(f: &ParamMatrixFn, gamma: &dyn Curve, steps: usize) -> Result<Vec<f64>, FlowError> {
    if f.dim() != 2 {
        return Err(FlowError::NotTwoByTwo { n: f.dim() });
    }
    let steps = steps.max(2) + steps % 2;
    let mut theta_prev: Option<f64> = None;
    let mut theta = 0.0;
    let mut integral = [0.0; 2];
    let mut first: Option<Node> = None;
    let mut winding_theta0 = 0.0;
    for k in 0..=steps {
        let t = k as f64 / steps as f64;
        let (a, adot) = f.value_and_derivative(gamma, t)?;
        let scale = a.frobenius_norm().max(1.0);
        let (p, q, r, s) = (a[(0, 0)], a[(0, 1)], a[(1, 0)], a[(1, 1)]);
        let (pd, qd, rd, sd) = (adot[(0, 0)], adot[(0, 1)], adot[(1, 0)], adot[(1, 1)]);
        if r.norm() <= 1e-14 * scale {
            return Err(FlowError::CVanishes { t });
        }
        let delta = (p - s) * (p - s) + 4.0 * q * r;
        if delta.norm() <= 1e-14 * scale * scale {
            return Err(FlowError::DeltaVanishes { t });
        }
        let arg = delta.arg();
        theta = match theta_prev {
            None => {
                winding_theta0 = arg;
                arg
            }
            Some(prev) => theta + wrap_phase(arg - prev),
        };
        theta_prev = Some(arg);
        let root = Complex64::from_polar(delta.norm().sqrt(), theta / 2.0);
        let delta_dot = 2.0 * (p - s) * (pd - sd) + 4.0 * (qd * r + q * rd);
        let root_dot = delta_dot / (2.0 * root);

        let half_diff = (p - s) / 2.0;
        let half_diff_dot = (pd - sd) / 2.0;
        let mut node = Node {
            fields: [[Complex64::new(0.0, 0.0); 2]; 2],
            derivs: [[Complex64::new(0.0, 0.0); 2]; 2],
            lambda: [Complex64::new(0.0, 0.0); 2],
        };
        for (idx, sign) in [1.0, -1.0].into_iter().enumerate() {
            node.fields[idx] = [half_diff + sign * root / 2.0, r];
            node.derivs[idx] = [half_diff_dot + sign * root_dot / 2.0, rd];
            node.lambda[idx] = (p + s) / 2.0 + sign * root / 2.0;
        }
        let [v_plus, v_minus] = node.fields;
        let det = v_plus[0] * v_minus[1] - v_minus[0] * v_plus[1];
        // Rows of the inverse of [v+ v−].
        let w = [
            [v_minus[1] / det, -v_minus[0] / det],
            [-v_plus[1] / det, v_plus[0] / det],
        ];
        let weight = if k == 0 || k == steps {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        for idx in 0..2 {
            let dv = node.derivs[idx];
            let val = w[idx][0] * dv[0] + w[idx][1] * dv[1];
            integral[idx] -= weight * val.im;
        }
        if k == 0 {
            first = Some(node);
        }
    }
    let h = 1.0 / steps as f64;
    for v in integral.iter_mut() {
        *v *= h / 3.0;
    }
    let swapped = ((theta - winding_theta0) / (2.0 * PI)).round().rem_euclid(2.0) == 1.0;

    let first = first.expect("at least one node");
    let a0 = f.evaluate(gamma.point(0.0))?;
    let eig = eig_small(&a0, 1e-10)?;
    // Index of the dense eigenpair for each field, and the phase of the
    // field relative to that eigenvector.
    let j_plus = if (eig.values[0] - first.lambda[0]).norm() <= (eig.values[1] - first.lambda[0]).norm() {
        0
    } else {
        1
    };
    let index = [j_plus, 1 - j_plus];
    let mut beta = [0.0; 2];
    for idx in 0..2 {
        let v = eig.vectors.column(index[idx]);
        let field = first.fields[idx];
        let overlap = v[0].conj() * field[0] + v[1].conj() * field[1];
        beta[idx] = overlap.arg();
    }
    let mut phases = vec![0.0; 2];
    for idx in 0..2 {
        let partner = if swapped { 1 - idx } else { idx };
        phases[index[idx]] = wrap_phase(integral[idx] - beta[idx] + beta[partner]);
    }
    Ok(phases)
}

use num_complex::Complex64;

use super::matching::match_eigenvalues;
use super::FlowError;
use crate::linalg::{eig_small, eigen_residual, min_gap, ComplexMatrix, Lu};
use crate::model::{Curve, ParamMatrixFn, Segment};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct FlowOptions {
    /// Base RK4 steps per unit of `t`.
    pub steps_per_period: usize,
    /// Replace eigenpairs by exact ones every this many base steps.
    pub correction_interval: Option<usize>,
    /// Step-doubling error bound per base step.
    pub local_tol: f64,
    /// Maximum number of recursive halvings of a base step.
    pub max_halvings: u32,
    /// Smallest eigenvalue gap, relative to `‖A‖_F` at the start.
    pub gap_floor: f64,
    /// Allowed column-norm drift per unit of `t`.
    pub norm_tol: f64,
    /// Allowed residual `‖AV − VΛ‖_F` at every sample.
    pub path_tol: f64,
    /// Record a sample every this many base steps.
    pub sample_every: usize,
    /// Residual tolerance passed to the dense eigensolver.
    pub eig_tol: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            steps_per_period: 2048,
            correction_interval: Some(32),
            local_tol: 1e-12,
            max_halvings: 12,
            gap_floor: 1e-8,
            norm_tol: 1e-8,
            path_tol: 1e-6,
            sample_every: 1,
            eig_tol: 1e-10,
        }
    }
}

impl FlowOptions {
    fn validate(&self) -> Result<(), FlowError> {
        if self.steps_per_period < 64 {
            return Err(FlowError::InvalidOptions(format!(
                "steps_per_period must be at least 64, got {}",
                self.steps_per_period
            )));
        }
        if self.sample_every == 0 || self.correction_interval == Some(0) {
            return Err(FlowError::InvalidOptions("intervals must be positive".into()));
        }
        Ok(())
    }
}

/// Eigenvalues and eigenvector matrix at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub values: Vec<Complex64>,
    pub vectors: ComplexMatrix,
}

impl FlowState {
    /// Dense eigendecomposition of `A(γ(t))`, in the solver's order and gauge.
    pub fn initial(f: &ParamMatrixFn, curve: &dyn Curve, t: f64, eig_tol: f64) -> Result<Self, FlowError> {
        let a = f.evaluate(curve.point(t))?;
        let eig = eig_small(&a, eig_tol)?;
        Ok(Self {
            values: eig.values,
            vectors: eig.vectors,
        })
    }

    fn column_norms(&self) -> Vec<f64> {
        let v = &self.vectors;
        (0..v.cols())
            .map(|j| (0..v.rows()).map(|i| v[(i, j)].norm_sqr()).sum::<f64>().sqrt())
            .collect()
    }

    fn pack(&self) -> Vec<Complex64> {
        let mut y = self.values.clone();
        y.extend_from_slice(self.vectors.as_slice());
        y
    }

    fn unpack(n: usize, y: &[Complex64]) -> Self {
        Self {
            values: y[..n].to_vec(),
            vectors: ComplexMatrix::new(n, n, y[n..].to_vec()).unwrap_or_else(|_| {
                // Non-finite state; keep the shape and let the caller's checks fail.
                let mut m = ComplexMatrix::zeros(n, n);
                for (k, z) in y[n..].iter().enumerate() {
                    m[(k / n, k % n)] = *z;
                }
                m
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub values: Vec<Complex64>,
    pub vectors: ComplexMatrix,
    /// `max_j | ‖v_j(t)‖ − ‖v_j(t₀)‖ |`.
    pub norm_drift: f64,
    /// `‖A V − V Λ‖_F`.
    pub residual: f64,
    /// `max_j |Im P_jj|`.
    pub imag_diag_p: f64,
    /// `max_j |d/dt ‖v_j‖²|` evaluated from `P`.
    pub norm_rate: f64,
    /// `‖P‖_F`, for scaling the rate above.
    pub coupling_norm: f64,
}

#[derive(Debug, Clone)]
pub struct EigenPath {
    pub samples: Vec<Sample>,
    pub reference_norms: Vec<f64>,
    pub t_start: f64,
    pub t_end: f64,
    pub steps_per_period: usize,
    pub sample_every: usize,
    /// Base steps that needed at least one halving.
    pub refined_steps: usize,
    pub corrections: usize,
}

impl EigenPath {
    pub fn dim(&self) -> usize {
        self.reference_norms.len()
    }

    pub fn first(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("paths always hold at least one sample")
    }

    /// The sample at exactly `t_start + k`, if recorded.
    pub fn at_period(&self, k: usize) -> Option<&Sample> {
        let target = self.t_start + k as f64;
        self.samples.iter().find(|s| s.t == target)
    }

    pub fn max_norm_drift(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_drift).fold(0.0, f64::max)
    }

    pub fn max_residual(&self) -> f64 {
        self.samples.iter().map(|s| s.residual).fold(0.0, f64::max)
    }

    pub fn max_imag_diag_p(&self) -> f64 {
        self.samples.iter().map(|s| s.imag_diag_p).fold(0.0, f64::max)
    }

    /// CSV with columns `t`, `re_l{j}`, `im_l{j}`, `norm_drift`, `residual`.
    pub fn to_csv(&self) -> String {
        let n = self.dim();
        let mut out = String::from("t");
        for j in 0..n {
            out.push_str(&format!(",re_l{j},im_l{j}"));
        }
        out.push_str(",norm_drift,residual\n");
        for s in &self.samples {
            out.push_str(&format!("{:.17e}", s.t));
            for z in &s.values {
                out.push_str(&format!(",{:.17e},{:.17e}", z.re, z.im));
            }
            out.push_str(&format!(",{:.17e},{:.17e}\n", s.norm_drift, s.residual));
        }
        out
    }
}

/// The generator `P` of `V̇ = V P` for the current state and `Ȧ`.
///
/// Off the diagonal `P_jk = (V⁻¹ȦV)_jk / (λ_k − λ_j)`. The diagonal is real
/// and chosen so that every column norm is stationary.
pub fn coupling_matrix(
    v: &ComplexMatrix,
    values: &[Complex64],
    adot: &ComplexMatrix,
    gap_floor: f64,
) -> Result<ComplexMatrix, FlowError> {
    Ok(coupling_parts(v, values, adot, gap_floor, f64::NAN)?.1)
}

/// Returns `(diag(V⁻¹ȦV), P)`.
fn coupling_parts(
    v: &ComplexMatrix,
    values: &[Complex64],
    adot: &ComplexMatrix,
    gap_floor: f64,
    t: f64,
) -> Result<(Vec<Complex64>, ComplexMatrix), FlowError> {
    let n = values.len();
    let gap = min_gap(values);
    if n > 1 && !(gap >= gap_floor) {
        return Err(FlowError::Collision { t, gap });
    }
    let lu = Lu::factor(v)?;
    let mut g = adot.multiply(v)?;
    let mut col = vec![ZERO; n];
    for j in 0..n {
        for i in 0..n {
            col[i] = g[(i, j)];
        }
        lu.solve_in_place(&mut col);
        g.set_column(j, &col);
    }
    let mut p = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        for k in 0..n {
            if j != k {
                p[(j, k)] = g[(j, k)] / (values[k] - values[j]);
            }
        }
    }
    for j in 0..n {
        let mut norm_sq = 0.0;
        let mut coupling = 0.0;
        for k in 0..n {
            // v_j* v_k
            let mut dot = ZERO;
            for i in 0..n {
                dot += v[(i, j)].conj() * v[(i, k)];
            }
            if k == j {
                norm_sq = dot.re;
            } else {
                coupling += (dot * p[(k, j)]).re;
            }
        }
        p[(j, j)] = Complex64::new(-coupling / norm_sq, 0.0);
    }
    Ok((g.diagonal(), p))
}

struct Integrator<'a> {
    f: &'a ParamMatrixFn,
    curve: &'a dyn Curve,
    n: usize,
    gap_floor: f64,
    local_tol: f64,
    max_halvings: u32,
    refined: bool,
}

impl Integrator<'_> {
    fn rhs(&self, t: f64, y: &[Complex64]) -> Result<Vec<Complex64>, FlowError> {
        let n = self.n;
        let state = FlowState::unpack(n, y);
        let adot = self.f.derivative_along(self.curve, t)?;
        let (lambda_dot, p) = coupling_parts(&state.vectors, &state.values, &adot, self.gap_floor, t)?;
        let vdot = state.vectors.mul_unchecked(&p);
        let mut out = lambda_dot;
        out.extend_from_slice(vdot.as_slice());
        Ok(out)
    }

    fn rk4(&self, t: f64, y: &[Complex64], k1: &[Complex64], h: f64) -> Result<Vec<Complex64>, FlowError> {
        let stage = |k: &[Complex64], c: f64| -> Vec<Complex64> { y.iter().zip(k).map(|(a, b)| a + b * c).collect() };
        let k2 = self.rhs(t + h / 2.0, &stage(k1, h / 2.0))?;
        let k3 = self.rhs(t + h / 2.0, &stage(&k2, h / 2.0))?;
        let k4 = self.rhs(t + h, &stage(&k3, h))?;
        Ok((0..y.len())
            .map(|i| y[i] + (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0))
            .collect())
    }

    /// RK4 over `[t, t + h]` with step doubling; halves recursively until the
    /// estimated local error meets the tolerance.
    fn advance(&mut self, t: f64, y: &[Complex64], h: f64, depth: u32) -> Result<Vec<Complex64>, FlowError> {
        let k1 = self.rhs(t, y)?;
        let full = self.rk4(t, y, &k1, h)?;
        let mid = self.rk4(t, y, &k1, h / 2.0)?;
        let k1_mid = self.rhs(t + h / 2.0, &mid)?;
        let half = self.rk4(t + h / 2.0, &mid, &k1_mid, h / 2.0)?;
        let err = half
            .iter()
            .zip(&full)
            .map(|(a, b)| (a - b).norm() / a.norm().max(1.0))
            .fold(0.0, f64::max)
            / 15.0;
        if err <= self.local_tol {
            return Ok(half);
        }
        if !err.is_finite() || depth >= self.max_halvings {
            return Err(FlowError::StepUnderflow { t });
        }
        self.refined = true;
        let mid = self.advance(t, y, h / 2.0, depth + 1)?;
        self.advance(t + h / 2.0, &mid, h / 2.0, depth + 1)
    }
}

/// Integrates along `curve` from `t_start` to `t_end` starting at `init`.
/// Step count is `steps_per_period` per unit length of the parameter interval.
pub fn integrate_curve(
    f: &ParamMatrixFn,
    curve: &dyn Curve,
    t_start: f64,
    t_end: f64,
    init: FlowState,
    opts: &FlowOptions,
) -> Result<EigenPath, FlowError> {
    opts.validate()?;
    let n = f.dim();
    if init.values.len() != n || init.vectors.rows() != n || init.vectors.cols() != n {
        return Err(FlowError::InvalidOptions("initial state has the wrong dimension".into()));
    }
    let span = t_end - t_start;
    if !(span.is_finite() && span > 0.0) {
        return Err(FlowError::InvalidOptions(format!("empty parameter interval [{t_start}, {t_end}]")));
    }
    let a0 = f.evaluate(curve.point(t_start))?;
    let mut integ = Integrator {
        f,
        curve,
        n,
        gap_floor: opts.gap_floor * a0.frobenius_norm().max(f64::MIN_POSITIVE),
        local_tol: opts.local_tol,
        max_halvings: opts.max_halvings,
        refined: false,
    };
    let total = ((span * opts.steps_per_period as f64).round() as usize).max(1);
    let reference_norms = init.column_norms();
    let drift_bound = opts.norm_tol * span.max(1.0);

    let mut path = EigenPath {
        samples: Vec::with_capacity(total / opts.sample_every + 2),
        reference_norms: reference_norms.clone(),
        t_start,
        t_end,
        steps_per_period: opts.steps_per_period,
        sample_every: opts.sample_every,
        refined_steps: 0,
        corrections: 0,
    };
    let mut state = init;
    record(&integ, &mut path, t_start, &state, opts, drift_bound)?;

    for i in 1..=total {
        let t_prev = t_start + span * ((i - 1) as f64 / total as f64);
        let t = if i == total { t_end } else { t_start + span * (i as f64 / total as f64) };
        integ.refined = false;
        let y = integ.advance(t_prev, &state.pack(), t - t_prev, 0)?;
        if integ.refined {
            path.refined_steps += 1;
        }
        state = FlowState::unpack(n, &y);
        if let Some(k) = opts.correction_interval {
            if i % k == 0 {
                correct(f, curve, t, &mut state, &reference_norms, opts.eig_tol)?;
                path.corrections += 1;
            }
        }
        if i % opts.sample_every == 0 || i == total {
            record(&integ, &mut path, t, &state, opts, drift_bound)?;
        }
    }
    Ok(path)
}

fn record(
    integ: &Integrator<'_>,
    path: &mut EigenPath,
    t: f64,
    state: &FlowState,
    opts: &FlowOptions,
    drift_bound: f64,
) -> Result<(), FlowError> {
    let a = integ.f.evaluate(integ.curve.point(t))?;
    let residual = eigen_residual(&a, &state.vectors, &state.values);
    let norms = state.column_norms();
    let norm_drift = norms
        .iter()
        .zip(&path.reference_norms)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let adot = integ.f.derivative_along(integ.curve, t)?;
    let (_, p) = coupling_parts(&state.vectors, &state.values, &adot, integ.gap_floor, t)?;
    let n = state.values.len();
    let mut imag_diag_p: f64 = 0.0;
    let mut norm_rate: f64 = 0.0;
    let v = &state.vectors;
    for j in 0..n {
        imag_diag_p = imag_diag_p.max(p[(j, j)].im.abs());
        let mut rate = 0.0;
        for k in 0..n {
            let mut dot = ZERO;
            for i in 0..n {
                dot += v[(i, j)].conj() * v[(i, k)];
            }
            rate += 2.0 * (dot * p[(k, j)]).re;
        }
        norm_rate = norm_rate.max(rate.abs());
    }
    if !(residual <= opts.path_tol) {
        return Err(FlowError::ResidualExceeded { t, residual });
    }
    if !(norm_drift <= drift_bound) {
        return Err(FlowError::GaugeDrift { t, drift: norm_drift });
    }
    path.samples.push(Sample {
        t,
        values: state.values.clone(),
        vectors: state.vectors.clone(),
        norm_drift,
        residual,
        imag_diag_p,
        norm_rate,
        coupling_norm: p.frobenius_norm(),
    });
    Ok(())
}

/// Snaps each eigenpair to the dense solution nearest in eigenvalue, keeping
/// the reference column norm and the phase of the largest component.
fn correct(
    f: &ParamMatrixFn,
    curve: &dyn Curve,
    t: f64,
    state: &mut FlowState,
    reference_norms: &[f64],
    eig_tol: f64,
) -> Result<(), FlowError> {
    let a = f.evaluate(curve.point(t))?;
    let eig = eig_small(&a, eig_tol)?;
    let perm = match_eigenvalues(&state.values, &eig.values);
    let half_gap = eig.min_gap() / 2.0;
    let n = state.values.len();
    for j in 0..n {
        if (state.values[j] - eig.values[perm[j]]).norm() >= half_gap {
            return Err(FlowError::CorrectionMismatch { t });
        }
    }
    for j in 0..n {
        let exact = eig.vectors.column(perm[j]);
        let current = state.vectors.column(j);
        let m = (0..n)
            .max_by(|&a, &b| current[a].norm().total_cmp(&current[b].norm()))
            .expect("nonempty column");
        let phase = (current[m] / current[m].norm()) / (exact[m] / exact[m].norm());
        let scale = phase * reference_norms[j];
        let corrected: Vec<Complex64> = exact.iter().map(|z| z * scale).collect();
        state.vectors.set_column(j, &corrected);
        state.values[j] = eig.values[perm[j]];
    }
    Ok(())
}

/// Integrates `periods` traversals of a loop starting at `t = start`.
pub fn integrate_loop(
    f: &ParamMatrixFn,
    gamma: &dyn Curve,
    start: f64,
    periods: usize,
    opts: &FlowOptions,
) -> Result<EigenPath, FlowError> {
    if periods == 0 {
        return Err(FlowError::InvalidOptions("periods must be positive".into()));
    }
    let init = FlowState::initial(f, gamma, start, opts.eig_tol)?;
    integrate_curve(f, gamma, start, start + periods as f64, init, opts)
}

/// Integrates out along `segment` and back, returning `‖V_end − V_start‖_F`.
pub fn reversibility_check(f: &ParamMatrixFn, segment: &Segment, opts: &FlowOptions) -> Result<f64, FlowError> {
    if segment.length() == 0.0 {
        return Ok(0.0);
    }
    let init = FlowState::initial(f, segment, 0.0, opts.eig_tol)?;
    let start = init.vectors.clone();
    let out = integrate_curve(f, segment, 0.0, 1.0, init, opts)?;
    let last = out.last();
    let mid = FlowState {
        values: last.values.clone(),
        vectors: last.vectors.clone(),
    };
    let back = Segment::new(segment.end, segment.start);
    let ret = integrate_curve(f, &back, 0.0, 1.0, mid, opts)?;
    Ok(ret.last().vectors.distance(&start))
}

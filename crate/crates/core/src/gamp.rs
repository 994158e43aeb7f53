//! Sum-product GAMP for a Bernoulli-Gaussian input and a (possibly quantized)
//! additive-Gaussian output channel.
//!
//! One iteration runs, in order:
//!
//! ```text
//! v_p = (A∘A) v_x                     p̂ = A x̂ − v_p ∘ ŝ_prev
//! ŝ, v_s = output_update(y, p̂, v_p)   (σ_v²/2 is added to v_p inside)
//! v_r = 1 / ((A∘A)ᵀ v_s)              r̂ = x̂ + v_r ∘ (Aᵀ ŝ)
//! x̂, v_x = input_denoise(r̂, v_r, ρ̂)
//! ```
//!
//! with ŝ and x̂ damped towards their previous values. The input prior of
//! coordinate `j` is `N(0, ½)` with probability `ρ̂_j` and 0 otherwise.
//!
//! The output functions follow the convention that the variance appearing in
//! both E1 and V1 is the noise-augmented `v = v_p + σ_v²/2`: for `u = z + noise`
//! restricted to the observed bin, `ŝ = (E[u|y] − p̂)/v` and
//! `v_s = (1 − var[u|y]/v)/v`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hgamp::coord_llr;
use crate::operator::LinearOperator;
use crate::quantizer::QuantizerSpec;
use crate::special::{logistic, logit, std_truncated_moments};

/// Prior variance of an active real channel coordinate.
pub const SLAB_VAR: f64 = 0.5;

/// Mean and variance of N(mean, var) truncated to (lo, hi).
///
/// Stable for intervals tens of standard deviations into either tail. When
/// the interval holds no mass at working precision the endpoint nearest to
/// `mean` is returned with zero variance.
pub fn trunc_gauss_moments(lo: f64, hi: f64, mean: f64, var: f64) -> (f64, f64) {
    let sd = var.sqrt();
    let a = (lo - mean) / sd;
    let b = (hi - mean) / sd;
    match std_truncated_moments(a, b) {
        Some((m, v)) => (mean + sd * m, var * v),
        None => {
            let nearest = if (lo - mean).abs() <= (hi - mean).abs() { lo } else { hi };
            (nearest, 0.0)
        }
    }
}

/// Posterior mean and variance of `x` given `r̂ = x + N(0, v_r)` under the
/// spike-and-slab prior `ρ̂·N(0, ½) + (1 − ρ̂)·δ₀`.
pub fn input_denoise(r_hat: f64, v_r: f64, rho: f64) -> (f64, f64) {
    let active = if rho <= 0.0 {
        0.0
    } else if rho >= 1.0 {
        1.0
    } else {
        logistic(logit(rho) + coord_llr(r_hat, v_r))
    };
    let gain = SLAB_VAR / (SLAB_VAR + v_r);
    let slab_mean = gain * r_hat;
    let slab_var = gain * v_r;
    let mean = active * slab_mean;
    let var = active * (slab_var + slab_mean * slab_mean) - mean * mean;
    (mean, var.max(0.0))
}

/// Observation model `y = g(z + v)`, `v ~ N(0, noise_var)` per real coordinate.
#[derive(Debug, Clone, PartialEq)]
pub enum OutputChannel {
    /// Unquantized: `y` is the noisy value itself.
    Gaussian { y: Vec<f64>, noise_var: f64 },
    /// Only the cell `(lo_i, hi_i)` containing `z_i + v_i` is observed.
    Interval {
        lo: Vec<f64>,
        hi: Vec<f64>,
        noise_var: f64,
    },
}

impl OutputChannel {
    pub fn gaussian(y: Vec<f64>, noise_var: f64) -> Result<Self> {
        if !(noise_var >= 0.0) {
            return Err(Error::config(format!("noise variance must be nonnegative, got {noise_var}")));
        }
        Ok(OutputChannel::Gaussian { y, noise_var })
    }

    /// Channel from the quantizer and observed bin of every coordinate.
    pub fn quantized(specs: &[QuantizerSpec], bins: &[usize], noise_var: f64) -> Result<Self> {
        if specs.len() != bins.len() {
            return Err(Error::dims("quantized channel", specs.len(), bins.len()));
        }
        let mut lo = Vec::with_capacity(bins.len());
        let mut hi = Vec::with_capacity(bins.len());
        for (spec, &bin) in specs.iter().zip(bins) {
            let (l, h) = spec.bin_interval(bin)?;
            lo.push(l);
            hi.push(h);
        }
        Self::intervals(lo, hi, noise_var)
    }

    pub fn intervals(lo: Vec<f64>, hi: Vec<f64>, noise_var: f64) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::dims("interval channel", lo.len(), hi.len()));
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(l < h)) {
            return Err(Error::config("every observation interval needs lo < hi"));
        }
        if !(noise_var >= 0.0) {
            return Err(Error::config(format!("noise variance must be nonnegative, got {noise_var}")));
        }
        Ok(OutputChannel::Interval { lo, hi, noise_var })
    }

    pub fn len(&self) -> usize {
        match self {
            OutputChannel::Gaussian { y, .. } => y.len(),
            OutputChannel::Interval { lo, .. } => lo.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn noise_var(&self) -> f64 {
        match self {
            OutputChannel::Gaussian { noise_var, .. } | OutputChannel::Interval { noise_var, .. } => *noise_var,
        }
    }

    /// E1/V1 for coordinate `i`.
    pub fn output_update(&self, i: usize, p_hat: f64, v_p: f64) -> (f64, f64) {
        match self {
            OutputChannel::Gaussian { y, noise_var } => {
                let v = v_p + noise_var;
                ((y[i] - p_hat) / v, 1.0 / v)
            }
            OutputChannel::Interval { lo, hi, noise_var } => output_update(lo[i], hi[i], p_hat, v_p, *noise_var),
        }
    }
}

/// E1/V1 for an interval observation: returns `(ŝ, v_s)` with `v_s ∈ [0, 1/v]`.
pub fn output_update(lo: f64, hi: f64, p_hat: f64, v_p: f64, noise_var: f64) -> (f64, f64) {
    let v = v_p + noise_var;
    let (m, vt) = trunc_gauss_moments(lo, hi, p_hat, v);
    let s = (m - p_hat) / v;
    let vs = ((1.0 - vt / v) / v).clamp(0.0, 1.0 / v);
    (s, vs)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GampOptions {
    /// Weight β of the new iterate in the damped update of ŝ and x̂.
    pub damping: f64,
    pub max_iter: usize,
    /// Relative change of x̂ below which iteration stops.
    pub tol: f64,
    pub var_min: f64,
    pub var_max: f64,
    /// ρ̂ is kept in [rho_eps, 1 − rho_eps].
    pub rho_eps: f64,
}

impl Default for GampOptions {
    fn default() -> Self {
        Self {
            damping: 0.8,
            max_iter: 50,
            tol: 1e-6,
            var_min: 1e-12,
            var_max: 1e12,
            rho_eps: 1e-12,
        }
    }
}

impl GampOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::config(format!("damping must lie in (0,1], got {}", self.damping)));
        }
        if self.max_iter == 0 {
            return Err(Error::config("max_iter must be at least 1"));
        }
        if !(self.var_min > 0.0 && self.var_min < self.var_max) {
            return Err(Error::config("variance clamps need 0 < var_min < var_max"));
        }
        if !(self.rho_eps >= 0.0 && self.rho_eps < 0.5) {
            return Err(Error::config("rho_eps must lie in [0, 0.5)"));
        }
        Ok(())
    }
}

/// Per-iteration GAMP state.
#[derive(Debug, Clone, PartialEq)]
pub struct GampState {
    pub x_hat: Vec<f64>,
    pub v_x: Vec<f64>,
    pub s_hat: Vec<f64>,
    pub v_s: Vec<f64>,
    pub p_hat: Vec<f64>,
    pub v_p: Vec<f64>,
    pub r_hat: Vec<f64>,
    pub v_r: Vec<f64>,
    pub rho_hat: Vec<f64>,
    pub iter: usize,
}

impl GampState {
    /// Prior-mean start: `x̂ = 0`, `v_x = ρ⁰/2`, `ŝ = 0`, `ρ̂ = ρ⁰`.
    pub fn new(rows: usize, cols: usize, rho0: f64) -> Self {
        Self {
            x_hat: vec![0.0; cols],
            v_x: vec![rho0 * SLAB_VAR; cols],
            s_hat: vec![0.0; rows],
            v_s: vec![0.0; rows],
            p_hat: vec![0.0; rows],
            v_p: vec![0.0; rows],
            r_hat: vec![0.0; cols],
            v_r: vec![0.0; cols],
            rho_hat: vec![rho0; cols],
            iter: 0,
        }
    }

    pub fn mean_rho(&self) -> f64 {
        self.rho_hat.iter().sum::<f64>() / self.rho_hat.len().max(1) as f64
    }

    fn all_finite(&self) -> bool {
        [
            &self.x_hat,
            &self.v_x,
            &self.s_hat,
            &self.v_s,
            &self.p_hat,
            &self.v_p,
            &self.r_hat,
            &self.v_r,
        ]
        .iter()
        .all(|v| v.iter().all(|x| x.is_finite()))
    }
}

/// One row of the convergence trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub residual: f64,
    pub mean_rho: f64,
}

/// Render a trace as CSV (`iteration,residual,mean_rho`).
pub fn trace_csv(trace: &[TraceRow]) -> String {
    let mut out = String::from("iteration,residual,mean_rho\n");
    for row in trace {
        out.push_str(&format!("{},{:e},{}\n", row.iteration, row.residual, row.mean_rho));
    }
    out
}

fn check_dims(op: &dyn LinearOperator, channel: &OutputChannel, state: &GampState) -> Result<()> {
    if channel.len() != op.rows() {
        return Err(Error::dims("GAMP observations", op.rows(), channel.len()));
    }
    if state.x_hat.len() != op.cols() || state.rho_hat.len() != op.cols() {
        return Err(Error::dims("GAMP state columns", op.cols(), state.x_hat.len()));
    }
    if state.s_hat.len() != op.rows() {
        return Err(Error::dims("GAMP state rows", op.rows(), state.s_hat.len()));
    }
    Ok(())
}

/// One basic-GAMP iteration using the sparsity levels in `state.rho_hat`.
///
/// Returns the relative change `‖x̂ᵗ − x̂ᵗ⁻¹‖ / max(‖x̂ᵗ‖, 1e−12)`.
pub fn gamp_iterate(
    op: &dyn LinearOperator,
    channel: &OutputChannel,
    state: &mut GampState,
    opts: &GampOptions,
) -> Result<f64> {
    check_dims(op, channel, state)?;
    let beta = opts.damping;
    let clamp = |v: f64| v.clamp(opts.var_min, opts.var_max);

    // Factor update, linear step.
    op.apply_sq(&state.v_x, &mut state.v_p);
    state.v_p.iter_mut().for_each(|v| *v = clamp(*v));
    op.apply(&state.x_hat, &mut state.p_hat);
    for ((p, v), s) in state.p_hat.iter_mut().zip(&state.v_p).zip(&state.s_hat) {
        *p -= v * s;
    }

    // Factor update, nonlinear step.
    for i in 0..state.s_hat.len() {
        let (s, vs) = channel.output_update(i, state.p_hat[i], state.v_p[i]);
        state.s_hat[i] = beta * s + (1.0 - beta) * state.s_hat[i];
        state.v_s[i] = vs;
    }

    // Variable update, linear step.
    op.apply_sq_t(&state.v_s, &mut state.v_r);
    state.v_r.iter_mut().for_each(|v| *v = clamp(1.0 / *v));
    op.apply_t(&state.s_hat, &mut state.r_hat);
    for ((r, v), x) in state.r_hat.iter_mut().zip(&state.v_r).zip(&state.x_hat) {
        *r = x + v * *r;
    }

    // Variable update, nonlinear step.
    let mut diff = 0.0;
    let mut norm = 0.0;
    for j in 0..state.x_hat.len() {
        let rho = state.rho_hat[j].clamp(opts.rho_eps, 1.0 - opts.rho_eps);
        let (x, vx) = input_denoise(state.r_hat[j], state.v_r[j], rho);
        let x = beta * x + (1.0 - beta) * state.x_hat[j];
        diff += (x - state.x_hat[j]).powi(2);
        norm += x * x;
        state.x_hat[j] = x;
        state.v_x[j] = clamp(vx);
    }
    state.iter += 1;

    if !state.all_finite() {
        return Err(Error::Diverged {
            iteration: state.iter,
            trace: Vec::new(),
        });
    }
    Ok(diff.sqrt() / norm.sqrt().max(1e-12))
}

/// Basic GAMP with fixed per-coordinate sparsity levels, run to the stopping rule.
pub fn run_gamp(
    op: &dyn LinearOperator,
    channel: &OutputChannel,
    rho: &[f64],
    opts: &GampOptions,
) -> Result<(GampState, Vec<TraceRow>)> {
    opts.validate()?;
    if rho.len() != op.cols() {
        return Err(Error::dims("GAMP prior", op.cols(), rho.len()));
    }
    let mut state = GampState::new(op.rows(), op.cols(), 0.0);
    for (j, &r) in rho.iter().enumerate() {
        state.rho_hat[j] = r;
        state.v_x[j] = r * SLAB_VAR;
    }
    let mut trace = Vec::new();
    for _ in 0..opts.max_iter {
        let residual = gamp_iterate(op, channel, &mut state, opts).map_err(|e| attach_trace(e, &trace))?;
        trace.push(TraceRow {
            iteration: state.iter,
            residual,
            mean_rho: state.mean_rho(),
        });
        if residual < opts.tol {
            break;
        }
    }
    Ok((state, trace))
}

pub(crate) fn attach_trace(err: Error, trace: &[TraceRow]) -> Error {
    match err {
        Error::Diverged { iteration, .. } => Error::Diverged {
            iteration,
            trace: trace.to_vec(),
        },
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::operator::RealMatrix;
    use crate::quantizer::design_sample_quantizer;

    #[test]
    fn untruncated_moments_are_unchanged() {
        let (m, v) = trunc_gauss_moments(f64::NEG_INFINITY, f64::INFINITY, 1.3, 0.7);
        assert_eq!((m, v), (1.3, 0.7));
    }

    #[test]
    fn half_normal_moments() {
        // Frozen from the quadrature oracle: √(2/π), 1 − 2/π.
        let (m, v) = trunc_gauss_moments(0.0, f64::INFINITY, 0.0, 1.0);
        assert!((m - 0.797_884_560_802_865_4).abs() < 1e-14);
        assert!((v - 0.363_380_227_632_418_6).abs() < 1e-14);
    }

    #[test]
    fn far_tail_interval_stays_inside() {
        let (m, v) = trunc_gauss_moments(8.0, 9.0, 0.0, 1.0);
        assert!(m > 8.0 && m < 9.0);
        assert!(v > 0.0 && v < 1.0);
        let (m, v) = trunc_gauss_moments(f64::NEG_INFINITY, -40.0, 0.0, 1.0);
        assert!(m < -40.0 && m > -40.1);
        assert!(v > 0.0 && v < 1e-3);
    }

    #[test]
    fn point_interval_falls_back() {
        let (m, v) = trunc_gauss_moments(2.0, 2.0, 0.0, 1.0);
        assert_eq!((m, v), (2.0, 0.0));
    }

    #[test]
    fn uninformative_bin_gives_zero_update() {
        let (s, vs) = output_update(f64::NEG_INFINITY, f64::INFINITY, 0.4, 2.0, 0.5);
        assert_eq!((s, vs), (0.0, 0.0));
    }

    #[test]
    fn sign_observation_update() {
        let q = design_sample_quantizer(2, 1.0).unwrap();
        let (lo, hi) = q.bin_interval(1).unwrap();
        let (s, vs) = output_update(lo, hi, 0.0, 1.0, 0.0);
        assert!((s - (2.0 / PI).sqrt()).abs() < 1e-14);
        assert!((vs - 2.0 / PI).abs() < 1e-14);
    }

    #[test]
    fn denoiser_limits() {
        assert_eq!(input_denoise(1.7, 0.3, 0.0), (0.0, 0.0));
        let (x, v) = input_denoise(1.7, 0.3, 1.0);
        let g = 0.5 / 0.8;
        assert!((x - g * 1.7).abs() < 1e-15);
        assert!((v - g * 0.3).abs() < 1e-15);
    }

    #[test]
    fn scalar_mmse_on_identity() {
        // A = I, Gaussian prior: the fixed point is x̂ = y/(1 + 2·noise).
        let n = 5;
        let a = RealMatrix::identity(n);
        let y = vec![0.3, -1.2, 2.0, 0.0, 0.7];
        let noise = 0.2;
        let ch = OutputChannel::gaussian(y.clone(), noise).unwrap();
        let opts = GampOptions {
            max_iter: 500,
            tol: 1e-13,
            ..Default::default()
        };
        let (state, _) = run_gamp(&a, &ch, &vec![1.0; n], &opts).unwrap();
        for (x, yi) in state.x_hat.iter().zip(&y) {
            let expected = SLAB_VAR / (SLAB_VAR + noise) * yi;
            assert!((x - expected).abs() < 1e-10, "{x} vs {expected}");
        }
    }

    #[test]
    fn single_bin_channel_keeps_prior_mean() {
        let a = RealMatrix::from_fn(4, 3, |i, j| (i as f64 - j as f64) * 0.3 + 0.1);
        let ch = OutputChannel::intervals(vec![f64::NEG_INFINITY; 4], vec![f64::INFINITY; 4], 0.1).unwrap();
        let mut state = GampState::new(4, 3, 0.3);
        gamp_iterate(&a, &ch, &mut state, &GampOptions::default()).unwrap();
        assert!(state.x_hat.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn mismatched_dimensions_rejected() {
        let a = RealMatrix::identity(3);
        let ch = OutputChannel::gaussian(vec![0.0; 2], 0.1).unwrap();
        let mut state = GampState::new(3, 3, 0.5);
        assert!(gamp_iterate(&a, &ch, &mut state, &GampOptions::default()).is_err());
    }

    #[test]
    fn nan_observation_reports_divergence() {
        let a = RealMatrix::identity(2);
        let ch = OutputChannel::gaussian(vec![f64::NAN, 0.0], 0.1).unwrap();
        let err = run_gamp(&a, &ch, &[0.5, 0.5], &GampOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Diverged { iteration: 1, .. }));
    }

    #[test]
    fn invalid_options_rejected() {
        let bad = GampOptions {
            damping: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn trace_renders() {
        let csv = trace_csv(&[TraceRow {
            iteration: 1,
            residual: 0.5,
            mean_rho: 0.25,
        }]);
        assert_eq!(csv, "iteration,residual,mean_rho\n1,5e-1,0.25\n");
    }
}

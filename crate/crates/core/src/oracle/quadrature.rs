//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! Infinite ranges are mapped onto finite ones (`x = a + t/(1−t)` for a
//! half-line, `x = t/(1−t²)` for the whole line). Callers integrating a peaked
//! density pass breakpoints around the mass so no subinterval can miss it.

use crate::error::{Error, Result};
use crate::special::normal_log_pdf;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_intervals: 5000,
        }
    }
}

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (k, (&x, &w)) in XGK.iter().zip(&WGK).take(7).enumerate() {
        let (f1, f2) = (f(c - h * x), f(c + h * x));
        kronrod += w * (f1 + f2);
        if k % 2 == 1 {
            gauss += WG[k / 2] * (f1 + f2);
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// ∫ f over a finite interval, globally adaptive.
fn integrate_finite(f: &dyn Fn(f64) -> f64, a: f64, b: f64, opts: &QuadOptions) -> Result<f64> {
    let mut pieces = vec![{
        let (v, e) = gk15(f, a, b);
        (a, b, v, e)
    }];
    loop {
        let total: f64 = pieces.iter().map(|p| p.2).sum();
        let err: f64 = pieces.iter().map(|p| p.3).sum();
        let magnitude: f64 = pieces.iter().map(|p| p.2.abs()).sum();
        if !total.is_finite() {
            return Err(Error::Quadrature(format!("non-finite integrand on [{a}, {b}]")));
        }
        let roundoff = 50.0 * f64::EPSILON * magnitude;
        if err <= opts.abs_tol.max(opts.rel_tol * total.abs()).max(roundoff) {
            return Ok(total);
        }
        if pieces.len() >= opts.max_intervals {
            return Err(Error::Quadrature(format!(
                "error estimate {err:e} above tolerance after {} subintervals",
                pieces.len()
            )));
        }
        let worst = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .expect("nonempty");
        let (lo, hi, _, _) = pieces.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            return Err(Error::Quadrature("interval bisection underflow".into()));
        }
        let (v1, e1) = gk15(f, lo, mid);
        let (v2, e2) = gk15(f, mid, hi);
        pieces.push((lo, mid, v1, e1));
        pieces.push((mid, hi, v2, e2));
    }
}

/// ∫_a^b f(x) dx; either endpoint may be infinite.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, opts: &QuadOptions) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if a > b {
        return integrate(f, b, a, opts).map(|v| -v);
    }
    match (a.is_finite(), b.is_finite()) {
        (true, true) => integrate_finite(&f, a, b, opts),
        (true, false) => {
            let g = |t: f64| {
                let s = 1.0 - t;
                f(a + t / s) / (s * s)
            };
            integrate_finite(&g, 0.0, 1.0, opts)
        }
        (false, true) => {
            let g = |t: f64| {
                let s = 1.0 - t;
                f(b - t / s) / (s * s)
            };
            integrate_finite(&g, 0.0, 1.0, opts)
        }
        (false, false) => {
            let g = |t: f64| {
                let s = 1.0 - t * t;
                f(t / s) * (1.0 + t * t) / (s * s)
            };
            integrate_finite(&g, -1.0, 1.0, opts)
        }
    }
}

/// ∫_a^b f after splitting at every breakpoint inside (a, b).
pub fn integrate_with_breaks(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    breaks: &[f64],
    opts: &QuadOptions,
) -> Result<f64> {
    let mut points: Vec<f64> = breaks.iter().copied().filter(|x| *x > a && *x < b && x.is_finite()).collect();
    points.sort_by(f64::total_cmp);
    points.dedup();
    let mut edges = vec![a];
    edges.extend(points);
    edges.push(b);
    let mut total = 0.0;
    for w in edges.windows(2) {
        total += integrate(&f, w[0], w[1], opts)?;
    }
    Ok(total)
}

/// Breakpoints at `center ± k·scale` for a ladder of multiples up to 64.
pub fn ladder(center: f64, scale: f64) -> Vec<f64> {
    let mut out = vec![center];
    for k in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0] {
        out.push(center - k * scale);
        out.push(center + k * scale);
    }
    out
}

/// Truncated-normal moments by direct integration of the density on (lo, hi).
///
/// The density is rescaled by its maximum over the interval, so intervals far
/// in the tails do not underflow. Integration runs in the offset from a finite
/// endpoint, so narrow intervals keep full precision.
pub fn quadrature_truncated_moments(lo: f64, hi: f64, mean: f64, var: f64) -> Result<(f64, f64)> {
    let opts = QuadOptions {
        abs_tol: 0.0,
        rel_tol: 1e-13,
        ..Default::default()
    };
    let sd = var.sqrt();
    let (a, b) = ((lo - mean) / sd, (hi - mean) / sd);
    let peak = 0.0f64.clamp(a, b);
    let origin = if a.is_finite() {
        a
    } else if b.is_finite() {
        b
    } else {
        0.0
    };
    let (ta, tb) = (a - origin, b - origin);
    let w = move |t: f64| {
        let u = origin + t;
        (-0.5 * (u - peak) * (u + peak)).exp()
    };
    let mut breaks = ladder(peak - origin, 1.0 / peak.abs().max(1.0));
    breaks.extend(ladder(-origin, 1.0));
    breaks.extend(ladder(0.5 * (ta + tb), 0.5 * (tb - ta)).into_iter().filter(|x| x.is_finite()));
    let mass = integrate_with_breaks(w, ta, tb, &breaks, &opts)?;
    let m1 = integrate_with_breaks(|t| t * w(t), ta, tb, &breaks, &opts)? / mass;
    let m2 = integrate_with_breaks(|t| (t - m1) * (t - m1) * w(t), ta, tb, &breaks, &opts)? / mass;
    Ok((mean + sd * (origin + m1), var * m2))
}

/// ∫_lo^hi φ(u; mean, var) du by quadrature.
pub fn quadrature_interval_mass(lo: f64, hi: f64, mean: f64, var: f64) -> Result<f64> {
    let sd = var.sqrt();
    let breaks = ladder(mean, sd);
    integrate_with_breaks(|u| normal_log_pdf(u, mean, var).exp(), lo, hi, &breaks, &QuadOptions::default())
}

/// Slab integrand `N(x; 0, slab_var)·N(r̂; x, v_r)` in log form, with its mode.
fn slab_log_integrand(r_hat: f64, v_r: f64, slab_var: f64) -> (impl Fn(f64) -> f64, f64, f64) {
    let f = move |x: f64| normal_log_pdf(x, 0.0, slab_var) + normal_log_pdf(r_hat, x, v_r);
    let mode = slab_var / (slab_var + v_r) * r_hat;
    let width = (slab_var * v_r / (slab_var + v_r)).sqrt();
    (f, mode, width)
}

/// `(log ∫ slab, E_slab[x], E_slab[x²])` of the slab part of the posterior.
fn slab_moments(r_hat: f64, v_r: f64, slab_var: f64) -> Result<(f64, f64, f64)> {
    let opts = QuadOptions {
        abs_tol: 0.0,
        rel_tol: 1e-13,
        ..Default::default()
    };
    let (log_f, mode, width) = slab_log_integrand(r_hat, v_r, slab_var);
    let shift = log_f(mode);
    let w = |x: f64| (log_f(x) - shift).exp();
    let breaks = ladder(mode, width);
    let (lo, hi) = (f64::NEG_INFINITY, f64::INFINITY);
    let z = integrate_with_breaks(&w, lo, hi, &breaks, &opts)?;
    let m1 = integrate_with_breaks(|x| x * w(x), lo, hi, &breaks, &opts)? / z;
    let c2 = integrate_with_breaks(|x| (x - m1) * (x - m1) * w(x), lo, hi, &breaks, &opts)? / z;
    Ok((z.ln() + shift, m1, c2 + m1 * m1))
}

/// Spike-and-slab posterior `(E[x|r̂], var[x|r̂])` by quadrature over the slab.
pub fn quadrature_denoise(r_hat: f64, v_r: f64, rho: f64, slab_var: f64) -> Result<(f64, f64)> {
    let (log_slab, m1, m2) = slab_moments(r_hat, v_r, slab_var)?;
    let log_spike = normal_log_pdf(r_hat, 0.0, v_r);
    // Posterior probability of the slab.
    let pi = 1.0 / (1.0 + ((1.0 - rho).ln() - rho.ln() + log_spike - log_slab).exp());
    let mean = pi * m1;
    Ok((mean, pi * m2 - mean * mean))
}

/// `log p(r̂ | active) − log p(r̂ | inactive)` with the slab marginal integrated numerically.
pub fn quadrature_coord_llr(r_hat: f64, v_r: f64, slab_var: f64) -> Result<f64> {
    let (log_slab, _, _) = slab_moments(r_hat, v_r, slab_var)?;
    Ok(log_slab - normal_log_pdf(r_hat, 0.0, v_r))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_normal_integrates_to_one() {
        let v = quadrature_interval_mass(f64::NEG_INFINITY, f64::INFINITY, 0.0, 1.0).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(|x| 3.0 * x * x, 0.0, 2.0, &QuadOptions::default()).unwrap();
        assert!((v - 8.0).abs() < 1e-13);
    }

    #[test]
    fn half_line_exponential() {
        let v = integrate(|x| (-x).exp(), 0.0, f64::INFINITY, &QuadOptions::default()).unwrap();
        assert!((v - 1.0).abs() < 1e-11);
        let v = integrate(|x| x.exp(), f64::NEG_INFINITY, 0.0, &QuadOptions::default()).unwrap();
        assert!((v - 1.0).abs() < 1e-11);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let v = integrate(|x| x, 1.0, 0.0, &QuadOptions::default()).unwrap();
        assert!((v + 0.5).abs() < 1e-14);
    }

    #[test]
    fn half_normal_reference() {
        let (m, v) = quadrature_truncated_moments(0.0, f64::INFINITY, 0.0, 1.0).unwrap();
        assert!((m - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-12);
        assert!((v - (1.0 - 2.0 / std::f64::consts::PI)).abs() < 1e-12);
    }

    #[test]
    fn unreachable_tolerance_errors() {
        let opts = QuadOptions {
            abs_tol: 0.0,
            rel_tol: 0.0,
            max_intervals: 4,
        };
        assert!(matches!(integrate(|x| x.sqrt(), 0.0, 1.0, &opts), Err(Error::Quadrature(_))));
    }
}

//! Scalar special functions shared by the message-passing kernels.
//!
//! The truncated-Gaussian moments are evaluated through the scaled
//! complementary error function `erfcx(x) = exp(x²)·erfc(x)` so that intervals
//! lying tens of standard deviations into a tail keep full relative precision.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::OnceLock;

use libm::{erf, erfc};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const INV_SQRT_PI: f64 = 0.564_189_583_547_756_3;

/// Standardized endpoints beyond this use the continued-fraction Mills ratio.
pub const ASYMPTOTIC_CROSSOVER: f64 = 8.0;

/// Largest finite log-odds fed to the logistic.
pub const LLR_CLAMP: f64 = 500.0;

/// Standard normal density.
#[inline]
pub fn std_normal_pdf(x: f64) -> f64 {
    if x.is_infinite() {
        return 0.0;
    }
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Gaussian density φ(x; mean, var).
#[inline]
pub fn normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    (-0.5 * d * d / var).exp() / (2.0 * PI * var).sqrt()
}

/// log φ(x; mean, var).
#[inline]
pub fn normal_log_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * (2.0 * PI * var).ln() - 0.5 * d * d / var
}

/// Scaled complementary error function exp(x²)·erfc(x).
pub fn erfcx(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        if x < -26.6 {
            return f64::INFINITY;
        }
        return 2.0 * (x * x).exp() - erfcx(-x);
    }
    if x < ASYMPTOTIC_CROSSOVER * FRAC_1_SQRT_2 {
        return (x * x).exp() * erfc(x);
    }
    if x.is_infinite() {
        return 0.0;
    }
    // Lentz evaluation of erfc(x)·exp(x²)·√π = 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    let tiny = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..500 {
        let a = 0.5 * k as f64;
        d = x + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = x + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    INV_SQRT_PI / f
}

/// Mills ratio Q(x)/φ(x) of the standard normal, finite for all x > −26.
#[inline]
pub fn mills_ratio(x: f64) -> f64 {
    (PI / 2.0).sqrt() * erfcx(x * FRAC_1_SQRT_2)
}

/// Upper-tail probability Q(x) = P(Z > x).
#[inline]
pub fn std_normal_sf(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// Standard normal CDF.
#[inline]
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Probability mass of N(mean, var) on the interval (lo, hi).
///
/// Tail intervals are evaluated on the side where the complementary error
/// function does not cancel.
pub fn gaussian_interval_mass(lo: f64, hi: f64, mean: f64, var: f64) -> f64 {
    let sd = var.sqrt();
    let a = (lo - mean) / sd;
    let b = (hi - mean) / sd;
    if a >= 0.0 {
        std_normal_sf(a) - std_normal_sf(b)
    } else if b <= 0.0 {
        std_normal_cdf(b) - std_normal_cdf(a)
    } else {
        0.5 * (erf(b * FRAC_1_SQRT_2) - erf(a * FRAC_1_SQRT_2))
    }
}

/// Logistic function 1/(1+exp(−x)) with the argument clamped to ±[`LLR_CLAMP`].
#[inline]
pub fn logistic(x: f64) -> f64 {
    let x = x.clamp(-LLR_CLAMP, LLR_CLAMP);
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Log-odds log(p/(1−p)).
#[inline]
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Numerically stable log(Σ exp(xᵢ)).
pub fn log_sum_exp(values: impl IntoIterator<Item = f64>) -> f64 {
    let values: Vec<f64> = values.into_iter().collect();
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Mean and variance of the standard normal truncated to (a, b), a < b.
///
/// Returns `None` when the interval carries no mass at working precision.
pub(crate) fn std_truncated_moments(a: f64, b: f64) -> Option<(f64, f64)> {
    if !(a < b) {
        return None;
    }
    if a == f64::NEG_INFINITY && b == f64::INFINITY {
        return Some((0.0, 1.0));
    }
    let width = b - a;
    let center = 0.5 * (a + b);
    if width.is_finite() && width * (1.0 + center.abs()) < NARROW_INTERVAL {
        return Some(narrow_interval_moments(center, 0.5 * width));
    }
    if b <= 0.0 {
        // Reflect so the interval sits on the right.
        let (m, v) = std_truncated_moments(-b, -a)?;
        return Some((-m, v));
    }
    if a >= 0.0 {
        return right_tail_moments(a, b);
    }
    // a < 0 < b: the interval contains the mode, no tail cancellation.
    let (pa, apa) = if a.is_infinite() {
        (0.0, 0.0)
    } else {
        let p = std_normal_pdf(a);
        (p, a * p)
    };
    let (pb, bpb) = if b.is_infinite() {
        (0.0, 0.0)
    } else {
        let p = std_normal_pdf(b);
        (p, b * p)
    };
    let mass = 0.5 * (erf(b * FRAC_1_SQRT_2) - erf(a * FRAC_1_SQRT_2));
    if !(mass > 0.0) {
        return None;
    }
    let mean = (pa - pb) / mass;
    let var = 1.0 + (apa - bpb) / mass - mean * mean;
    Some((mean.clamp(a, b), var.max(0.0)))
}

/// Intervals with `width·(1 + |center|)` below this use Gauss–Legendre.
const NARROW_INTERVAL: f64 = 2.0;
const GL_ORDER: usize = 16;

/// Gauss–Legendre nodes and weights on [−1, 1].
fn gauss_legendre() -> &'static [(f64, f64); GL_ORDER] {
    static RULE: OnceLock<[(f64, f64); GL_ORDER]> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_ORDER;
        let mut rule = [(0.0, 0.0); GL_ORDER];
        for (i, slot) in rule.iter_mut().enumerate() {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                // Legendre recurrence for P_n(x) and its derivative.
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            *slot = (x, 2.0 / ((1.0 - x * x) * dp * dp));
        }
        rule
    })
}

/// Moments on `center ± half` where the density changes by at most a few e-folds.
fn narrow_interval_moments(center: f64, half: f64) -> (f64, f64) {
    // Density relative to φ(center), as a function of the offset s.
    let g = |s: f64| (-center * s - 0.5 * s * s).exp();
    let rule = gauss_legendre();
    let (mut z, mut m1) = (0.0, 0.0);
    for &(x, w) in rule {
        let s = half * x;
        let gw = w * g(s);
        z += gw;
        m1 += gw * s;
    }
    m1 /= z;
    let mut m2 = 0.0;
    for &(x, w) in rule {
        let s = half * x;
        m2 += w * g(s) * (s - m1) * (s - m1);
    }
    (center + m1, m2 / z)
}

/// Moments on (a, b) with 0 ≤ a, written relative to φ(a) through Mills ratios.
fn right_tail_moments(a: f64, b: f64) -> Option<(f64, f64)> {
    let ma = mills_ratio(a);
    let (ratio, mb, b_ratio) = if b.is_infinite() {
        (0.0, 0.0, 0.0)
    } else {
        // φ(b)/φ(a)
        let r = (-(b - a) * (b + a) * 0.5).exp();
        (r, mills_ratio(b), b * r)
    };
    let one_minus = if b.is_infinite() {
        1.0
    } else {
        -(-(b - a) * (b + a) * 0.5).exp_m1()
    };
    let denom = ma - ratio * mb;
    if !(denom > 0.0) || !denom.is_finite() {
        return None;
    }
    let mean = one_minus / denom;
    let var = 1.0 + (a - b_ratio) / denom - mean * mean;
    if !mean.is_finite() || !var.is_finite() {
        return None;
    }
    Some((mean.clamp(a, b), var.max(0.0)))
}

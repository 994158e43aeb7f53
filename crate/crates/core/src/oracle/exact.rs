//! Exact activity posteriors by enumerating every activity pattern.
//!
//! Given a pattern λ, each `w_r` is zero-mean circularly-symmetric Gaussian
//! with covariance `Σ_{λ,r} = Σ_{n:λ_n=1} γ_{n,r}² s_n s_nᴴ + σ_v² I`, and the
//! RRHs are independent. Log-densities use a Cholesky factor of `Σ_{λ,r}`.

use nalgebra::Cholesky;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::CMatrix;
use crate::quantizer::QuantizerSpec;
use crate::special::{gaussian_interval_mass, log_sum_exp};

pub const MAX_ENUMERATED_UES: usize = 16;
const CONDITION_WARNING: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct ExactPosterior {
    /// `log p(W | λ)` for pattern bits `λ_n = (k >> n) & 1`.
    pub log_likelihood: Vec<f64>,
    /// `log p(λ_n = 1 | W) − log p(λ_n = 0 | W)`.
    pub llr: Vec<f64>,
}

fn check_sizes(n_ues: usize) -> Result<()> {
    if n_ues > MAX_ENUMERATED_UES {
        return Err(Error::config(format!(
            "exact enumeration refuses N={n_ues} (limit {MAX_ENUMERATED_UES})"
        )));
    }
    if n_ues == 0 {
        return Err(Error::config("exact enumeration needs at least one UE"));
    }
    Ok(())
}

/// `log CN(w; 0, Σ)`.
fn complex_gaussian_log_pdf(cov: CMatrix, w: &[Complex64]) -> Result<f64> {
    let m = w.len();
    let chol = Cholesky::new(cov).ok_or_else(|| Error::config("pattern covariance is not positive definite"))?;
    let l = chol.l_dirty();
    let diag: Vec<f64> = (0..m).map(|i| l[(i, i)].re).collect();
    let (dmin, dmax) = diag.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), d| (lo.min(*d), hi.max(*d)));
    if (dmax / dmin).powi(2) > CONDITION_WARNING {
        log::warn!("pattern covariance condition number above {CONDITION_WARNING:e}");
    }
    let log_det = 2.0 * diag.iter().map(|d| d.ln()).sum::<f64>();
    let z = chol.l().solve_lower_triangular(&CMatrix::from_column_slice(m, 1, w)).expect("nonsingular factor");
    let quad = z.iter().map(|c| c.norm_sqr()).sum::<f64>();
    Ok(-(m as f64) * std::f64::consts::PI.ln() - log_det - quad)
}

/// Marginal LLRs from per-pattern log-likelihoods and a Bernoulli(p) prior.
fn marginalize(log_likelihood: &[f64], n_ues: usize, p: f64) -> Vec<f64> {
    let (lp, lq) = (p.ln(), (1.0 - p).ln());
    let log_joint: Vec<f64> = log_likelihood
        .iter()
        .enumerate()
        .map(|(k, ll)| {
            let active = k.count_ones() as f64;
            ll + active * lp + (n_ues as f64 - active) * lq
        })
        .collect();
    (0..n_ues)
        .map(|n| {
            let on = log_sum_exp(log_joint.iter().enumerate().filter(|(k, _)| (k >> n) & 1 == 1).map(|(_, v)| *v));
            let off = log_sum_exp(log_joint.iter().enumerate().filter(|(k, _)| (k >> n) & 1 == 0).map(|(_, v)| *v));
            on - off
        })
        .collect()
}

/// Exact posterior from unquantized observations `W` (`M × R`).
pub fn exact_posterior_unquantized(
    signatures: &CMatrix,
    gamma: &[f64],
    noise_var: f64,
    received: &CMatrix,
    p: f64,
) -> Result<ExactPosterior> {
    let (m, n_ues) = signatures.shape();
    check_sizes(n_ues)?;
    let n_rrh = received.ncols();
    if received.nrows() != m {
        return Err(Error::dims("received rows", m, received.nrows()));
    }
    if gamma.len() != n_ues * n_rrh {
        return Err(Error::dims("gamma", n_ues * n_rrh, gamma.len()));
    }
    if !(p > 0.0 && p < 1.0) || !(noise_var > 0.0) {
        return Err(Error::config(format!("need 0 < p < 1 and σ_v² > 0, got p={p}, σ_v²={noise_var}")));
    }
    let outer: Vec<CMatrix> = (0..n_ues)
        .map(|n| {
            let s = signatures.column(n);
            &s * s.adjoint()
        })
        .collect();
    let mut log_likelihood = Vec::with_capacity(1 << n_ues);
    for k in 0..(1usize << n_ues) {
        let mut total = 0.0;
        for r in 0..n_rrh {
            let mut cov = CMatrix::identity(m, m) * Complex64::from(noise_var);
            for (n, o) in outer.iter().enumerate() {
                if (k >> n) & 1 == 1 {
                    cov += o * Complex64::from(gamma[n * n_rrh + r].powi(2));
                }
            }
            let w: Vec<Complex64> = received.column(r).iter().copied().collect();
            total += complex_gaussian_log_pdf(cov, &w)?;
        }
        log_likelihood.push(total);
    }
    let llr = marginalize(&log_likelihood, n_ues, p);
    Ok(ExactPosterior { log_likelihood, llr })
}

/// Exact marginal LLRs from unquantized observations.
pub fn exact_llr_unquantized(
    signatures: &CMatrix,
    gamma: &[f64],
    noise_var: f64,
    received: &CMatrix,
    p: f64,
) -> Result<Vec<f64>> {
    Ok(exact_posterior_unquantized(signatures, gamma, noise_var, received, p)?.llr)
}

/// Stochastic reference LLRs for quantized observations.
///
/// `p(bins | λ)` is estimated by averaging the exact conditional bin
/// probabilities over `samples` fading draws from the CN(0, 1) prior. The same
/// draws are shared by every pattern. `quantizers[r]` and `bins` follow the
/// lifted RRH-major order used by the QF detector.
pub fn sampled_llr_quantized<R: Rng + ?Sized>(
    signatures: &CMatrix,
    gamma: &[f64],
    noise_var: f64,
    quantizers: &[QuantizerSpec],
    bins: &[usize],
    p: f64,
    samples: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let (m, n_ues) = signatures.shape();
    check_sizes(n_ues)?;
    let n_rrh = quantizers.len();
    if bins.len() != 2 * m * n_rrh {
        return Err(Error::dims("quantized bins", 2 * m * n_rrh, bins.len()));
    }
    if gamma.len() != n_ues * n_rrh {
        return Err(Error::dims("gamma", n_ues * n_rrh, gamma.len()));
    }
    if samples == 0 {
        return Err(Error::config("sampling reference needs at least one sample"));
    }
    let mut intervals = Vec::with_capacity(bins.len());
    for (i, &b) in bins.iter().enumerate() {
        intervals.push(quantizers[i / (2 * m)].bin_interval(b)?);
    }
    let half = 0.5 * noise_var;
    let n_patterns = 1usize << n_ues;
    // Running log of Σ_samples p(bins | λ, h) per pattern.
    let mut acc = vec![f64::NEG_INFINITY; n_patterns];
    let mut fading = vec![Complex64::default(); n_ues * n_rrh];
    let mut z = vec![Complex64::default(); m];
    for _ in 0..samples {
        for h in fading.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *h = Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
        }
        for (k, slot) in acc.iter_mut().enumerate() {
            let mut log_prob = 0.0;
            for r in 0..n_rrh {
                z.fill(Complex64::default());
                for n in (0..n_ues).filter(|n| (k >> n) & 1 == 1) {
                    let coef = fading[n * n_rrh + r] * gamma[n * n_rrh + r];
                    for (zi, s) in z.iter_mut().zip(signatures.column(n).iter()) {
                        *zi += coef * s;
                    }
                }
                for (i, zi) in z.iter().enumerate() {
                    let base = 2 * (r * m + i);
                    let (lo, hi) = intervals[base];
                    log_prob += gaussian_interval_mass(lo, hi, zi.re, half).ln();
                    let (lo, hi) = intervals[base + 1];
                    log_prob += gaussian_interval_mass(lo, hi, zi.im, half).ln();
                }
            }
            *slot = log_sum_exp([*slot, log_prob]);
        }
    }
    let log_likelihood: Vec<f64> = acc.iter().map(|a| a - (samples as f64).ln()).collect();
    Ok(marginalize(&log_likelihood, n_ues, p))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn refuses_large_n() {
        let s = CMatrix::zeros(2, 17);
        let w = CMatrix::zeros(2, 1);
        assert!(exact_llr_unquantized(&s, &[1.0; 17], 1.0, &w, 0.1).is_err());
    }

    #[test]
    fn single_ue_closed_form() {
        let s = CMatrix::from_column_slice(2, 1, &[c(1.0, 0.0), c(0.0, 1.0)]);
        let w = CMatrix::from_column_slice(2, 1, &[c(0.5, -0.2), c(1.0, 0.3)]);
        let (sv, p) = (0.7, 0.2);
        let llr = exact_llr_unquantized(&s, &[1.0], sv, &w, p).unwrap();
        // Σ₁ = sv I + s sᴴ with ‖s‖² = 2: det = sv(sv+2), wᴴΣ₁⁻¹w = (‖w‖² − |sᴴw|²/(sv+2))/sv.
        let w2: f64 = w.iter().map(|x| x.norm_sqr()).sum();
        let sw = (s.adjoint() * &w)[(0, 0)].norm_sqr();
        let ll1 = -(sv * (sv + 2.0)).ln() - (w2 - sw / (sv + 2.0)) / sv;
        let ll0 = -2.0 * sv.ln() - w2 / sv;
        let expect = ll1 - ll0 + (p / (1.0 - p)).ln();
        assert!((llr[0] - expect).abs() < 1e-12);
    }
}

//! Scalar uniform quantizers for fronthaul samples and local LLRs.
//!
//! A quantizer with `L` levels is defined by its grid start `lo` and `step`.
//! The finite grid `[lo, lo + L·step]` is cut into `L` equal cells; the two
//! outer bins extend to ±∞, so the bins partition ℝ. Bin `k` is reconstructed
//! at `lo + (k + ½)·step`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::gaussian_interval_mass;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizerSpec {
    levels: usize,
    lo: f64,
    step: f64,
}

impl QuantizerSpec {
    pub fn new(levels: usize, lo: f64, step: f64) -> Result<Self> {
        if levels < 2 {
            return Err(Error::config(format!("quantizer needs at least 2 levels, got {levels}")));
        }
        if !(step > 0.0 && step.is_finite()) || !lo.is_finite() {
            return Err(Error::config(format!("invalid quantizer grid lo={lo}, step={step}")));
        }
        Ok(Self { levels, lo, step })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn hi(&self) -> f64 {
        self.lo + self.levels as f64 * self.step
    }

    /// Bits needed to index a bin.
    pub fn bits(&self) -> u32 {
        usize::BITS - (self.levels - 1).leading_zeros()
    }

    /// Bin containing `value`; values off the grid saturate into the outer bins.
    pub fn quantize(&self, value: f64) -> usize {
        let k = ((value - self.lo) / self.step).floor();
        if k.is_nan() || k < 0.0 {
            0
        } else {
            (k as usize).min(self.levels - 1)
        }
    }

    /// Inverse image of bin `index` as an open interval `(lo, hi)`.
    pub fn bin_interval(&self, index: usize) -> Result<(f64, f64)> {
        if index >= self.levels {
            return Err(Error::IndexOutOfRange {
                context: "quantizer bin",
                index,
                len: self.levels,
            });
        }
        let lo = if index == 0 {
            f64::NEG_INFINITY
        } else {
            self.edge(index)
        };
        let hi = if index + 1 == self.levels {
            f64::INFINITY
        } else {
            self.edge(index + 1)
        };
        Ok((lo, hi))
    }

    /// Reconstruction point of bin `index`.
    pub fn representative(&self, index: usize) -> f64 {
        self.lo + (index.min(self.levels - 1) as f64 + 0.5) * self.step
    }

    /// Quantize-then-reconstruct.
    pub fn requantize(&self, value: f64) -> f64 {
        self.representative(self.quantize(value))
    }

    fn edge(&self, k: usize) -> f64 {
        self.lo + k as f64 * self.step
    }
}

/// Probability that `z + N(0, noise_var)` falls in bin `index`.
pub fn bin_mass(spec: &QuantizerSpec, index: usize, z: f64, noise_var: f64) -> Result<f64> {
    let (lo, hi) = spec.bin_interval(index)?;
    Ok(gaussian_interval_mass(lo, hi, z, noise_var))
}

/// Sample quantizer for one real component: `2^{bits/2}` levels over ±3σ.
pub fn design_sample_quantizer(bits_per_complex: u32, sigma_real: f64) -> Result<QuantizerSpec> {
    if bits_per_complex < 2 || bits_per_complex % 2 != 0 {
        return Err(Error::config(format!(
            "bits per complex sample must be even and at least 2, got {bits_per_complex}"
        )));
    }
    if bits_per_complex / 2 >= usize::BITS {
        return Err(Error::config(format!("{bits_per_complex} bits per sample is too many")));
    }
    if !(sigma_real > 0.0 && sigma_real.is_finite()) {
        return Err(Error::config(format!("sample standard deviation must be positive, got {sigma_real}")));
    }
    let levels = 1usize << (bits_per_complex / 2);
    QuantizerSpec::new(levels, -3.0 * sigma_real, 6.0 * sigma_real / levels as f64)
}

/// Empirical 95% range of calibration LLRs, reusable across level counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LlrCalibration {
    pub lo: f64,
    pub hi: f64,
    pub samples: usize,
}

impl LlrCalibration {
    /// 2.5th and 97.5th percentiles (linear interpolation between order
    /// statistics). A degenerate range is widened to ±1 around its value.
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        let mut sorted: Vec<f64> = samples.iter().copied().filter(|v| v.is_finite()).collect();
        if sorted.is_empty() {
            return Err(Error::config("LLR calibration needs at least one finite sample"));
        }
        sorted.sort_by(f64::total_cmp);
        let (mut lo, mut hi) = (percentile(&sorted, 0.025), percentile(&sorted, 0.975));
        if !(hi > lo) {
            let c = 0.5 * (lo + hi);
            lo = c - 1.0;
            hi = c + 1.0;
        }
        Ok(Self {
            lo,
            hi,
            samples: sorted.len(),
        })
    }

    pub fn quantizer(&self, levels: usize) -> Result<QuantizerSpec> {
        if levels < 2 {
            return Err(Error::config(format!(
                "LLR quantizer needs at least 2 levels (1 bit per LLR), got {levels}"
            )));
        }
        QuantizerSpec::new(levels, self.lo, (self.hi - self.lo) / levels as f64)
    }
}

/// Sorted-sample percentile with linear interpolation.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 >= sorted.len() {
        sorted[sorted.len() - 1]
    } else {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    }
}

/// LLR quantizer spanning the empirical 95% range of `samples`.
pub fn design_llr_quantizer(levels: usize, samples: &[f64]) -> Result<QuantizerSpec> {
    if levels < 2 {
        return Err(Error::config(format!(
            "LLR quantizer needs at least 2 levels (1 bit per LLR), got {levels}"
        )));
    }
    LlrCalibration::from_samples(samples)?.quantizer(levels)
}

/// Bits per LLR under a budget of `M·b` bits for `N` LLRs: ⌊M·b/N⌋.
pub fn llr_bits(signature_len: usize, bits_per_complex: u32, n_ues: usize) -> usize {
    signature_len * bits_per_complex as usize / n_ues
}

/// `2^{⌊M·b/N⌋}` levels, rounding the exponent down; errors below 1 bit.
pub fn llr_levels(signature_len: usize, bits_per_complex: u32, n_ues: usize) -> Result<usize> {
    let bits = llr_bits(signature_len, bits_per_complex, n_ues);
    if bits == 0 {
        return Err(Error::config(format!(
            "fronthaul budget M·b/N = {}·{}/{} is below one bit per LLR",
            signature_len, bits_per_complex, n_ues
        )));
    }
    if bits >= usize::BITS as usize {
        return Err(Error::config(format!("{bits} bits per LLR is too many")));
    }
    Ok(1usize << bits)
}

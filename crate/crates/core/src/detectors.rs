//! Quantize-and-forward and detect-and-forward activity detection.
//!
//! QF: every RRH quantizes the real and imaginary part of each received
//! sample with `2^{b/2}` levels over ±3σ and the CU runs hybrid GAMP on the
//! stacked system with the quantized-Gaussian output channel.
//!
//! DtF: every RRH runs hybrid GAMP on its own analog samples, quantizes the
//! resulting per-UE LLRs with `2^{⌊Mb/N⌋}` levels and the CU sums them. Each
//! local LLR already contains the prior log-odds once, so the fused
//! statistic carries an offset of `R·log(p/(1−p))`; a threshold sweep
//! absorbs it.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gamp::{GampOptions, OutputChannel};
use crate::hgamp::{hgamp_run, GroupStructure, PosteriorSummary};
use crate::model::{lift_matrix, lift_vector, per_rrh_matrix, qf_operator, CMatrix, Scenario};
use crate::quantizer::{design_sample_quantizer, llr_bits, llr_levels, LlrCalibration, QuantizerSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Qf,
    Dtf,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Qf => "qf",
            Scheme::Dtf => "dtf",
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qf" => Ok(Scheme::Qf),
            "dtf" => Ok(Scheme::Dtf),
            other => Err(Error::config(format!("unknown scheme {other:?} (expected qf or dtf)"))),
        }
    }
}

/// Fronthaul rate of `bits` per complex sample for a system with `M` and `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FronthaulBudget {
    pub bits: u32,
    pub signature_len: usize,
    pub n_ues: usize,
}

impl FronthaulBudget {
    pub fn new(bits: u32, signature_len: usize, n_ues: usize) -> Self {
        Self {
            bits,
            signature_len,
            n_ues,
        }
    }

    /// Levels per real component of a QF sample.
    pub fn sample_levels(&self) -> Result<usize> {
        if self.bits < 2 || self.bits % 2 != 0 {
            return Err(Error::config(format!(
                "QF needs an even number of bits per sample ≥ 2, got {}",
                self.bits
            )));
        }
        Ok(1usize << (self.bits / 2))
    }

    /// Levels of the DtF LLR quantizer.
    pub fn llr_levels(&self) -> Result<usize> {
        llr_levels(self.signature_len, self.bits, self.n_ues)
    }

    /// Bits one RRH sends per slot under QF.
    pub fn qf_bits_per_rrh(&self) -> Result<usize> {
        let per_real = self.sample_levels()?.trailing_zeros() as usize;
        Ok(self.signature_len * 2 * per_real)
    }

    /// Bits one RRH sends per slot under DtF.
    pub fn dtf_bits_per_rrh(&self) -> Result<usize> {
        let levels = self.llr_levels()?;
        debug_assert_eq!(levels.trailing_zeros() as usize, llr_bits(self.signature_len, self.bits, self.n_ues));
        Ok(self.n_ues * levels.trailing_zeros() as usize)
    }

    /// Total slot budget `M·b` of one fronthaul link.
    pub fn capacity(&self) -> usize {
        self.signature_len * self.bits as usize
    }
}

/// Standard deviation of one real component of a received sample at RRH `r`:
/// `sqrt((p·Σ_n γ_{n,r}²·Es/M + σ_v²)/2)`.
pub fn sample_sigma(scenario: &Scenario, r: usize) -> f64 {
    let c = &scenario.config;
    let gain: f64 = (0..c.n_ues).map(|n| c.gamma(n, r).powi(2)).sum();
    let per_complex =
        c.activation_prob * gain * c.signature_energy / c.signature_len as f64 + scenario.noise_var;
    (0.5 * per_complex).sqrt()
}

/// Samples as the CU sees them after QF: one quantizer per RRH and the bin of
/// every real observation, ordered like the lifted stacked system.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedFronthaul {
    pub quantizers: Vec<QuantizerSpec>,
    pub bins: Vec<usize>,
}

impl QuantizedFronthaul {
    /// Bits each RRH puts on its link for this slot.
    pub fn bits_per_rrh(&self) -> Vec<usize> {
        let per_rrh = self.bins.len() / self.quantizers.len();
        self.quantizers.iter().map(|q| q.bits() as usize * per_rrh).collect()
    }
}

/// Quantize every RRH's samples at `budget.bits` per complex sample.
pub fn qf_quantize(scenario: &Scenario, budget: &FronthaulBudget) -> Result<QuantizedFronthaul> {
    budget.sample_levels()?;
    let c = &scenario.config;
    let mut quantizers = Vec::with_capacity(c.n_rrh);
    let mut bins = Vec::with_capacity(2 * c.n_rrh * c.signature_len);
    for r in 0..c.n_rrh {
        let q = design_sample_quantizer(budget.bits, sample_sigma(scenario, r))?;
        for w in scenario.received.column(r).iter() {
            bins.push(q.quantize(w.re));
            bins.push(q.quantize(w.im));
        }
        quantizers.push(q);
    }
    Ok(QuantizedFronthaul { quantizers, bins })
}

fn qf_groups(scenario: &Scenario) -> Result<GroupStructure> {
    GroupStructure::contiguous(scenario.config.n_ues, 2 * scenario.config.n_rrh)
}

/// QF detection at the CU from already-quantized fronthaul data.
pub fn qf_detect_from(scenario: &Scenario, fronthaul: &QuantizedFronthaul, opts: &GampOptions) -> Result<PosteriorSummary> {
    let c = &scenario.config;
    let per_coord: Vec<QuantizerSpec> = fronthaul
        .quantizers
        .iter()
        .flat_map(|q| std::iter::repeat_n(*q, 2 * c.signature_len))
        .collect();
    let channel = OutputChannel::quantized(&per_coord, &fronthaul.bins, 0.5 * scenario.noise_var)?;
    let op = qf_operator(&scenario.signatures, &c.gamma, c.n_rrh)?;
    hgamp_run(&op, &channel, &qf_groups(scenario)?, c.activation_prob, opts)
}

/// Quantize-and-forward: quantize at the RRHs, detect jointly at the CU.
pub fn qf_detect(scenario: &Scenario, budget: &FronthaulBudget, opts: &GampOptions) -> Result<PosteriorSummary> {
    let fronthaul = qf_quantize(scenario, budget)?;
    qf_detect_from(scenario, &fronthaul, opts)
}

/// Joint CU detection over an ideal (infinite-capacity) fronthaul.
pub fn cu_detect_unquantized(scenario: &Scenario, opts: &GampOptions) -> Result<PosteriorSummary> {
    let c = &scenario.config;
    let y = lift_vector(scenario.received.as_slice());
    let channel = OutputChannel::gaussian(y, 0.5 * scenario.noise_var)?;
    let op = qf_operator(&scenario.signatures, &c.gamma, c.n_rrh)?;
    hgamp_run(&op, &channel, &qf_groups(scenario)?, c.activation_prob, opts)
}

/// Local LLRs at one RRH from its unquantized samples `w_r`.
pub fn dtf_local(
    w_r: &[Complex64],
    signatures: &CMatrix,
    gamma_col: &[f64],
    p: f64,
    noise_var: f64,
    opts: &GampOptions,
) -> Result<Vec<f64>> {
    if w_r.len() != signatures.nrows() {
        return Err(Error::dims("RRH samples", signatures.nrows(), w_r.len()));
    }
    let op = lift_matrix(&per_rrh_matrix(signatures, gamma_col)?);
    let channel = OutputChannel::gaussian(lift_vector(w_r), 0.5 * noise_var)?;
    let groups = GroupStructure::contiguous(signatures.ncols(), 2)?;
    Ok(hgamp_run(&op, &channel, &groups, p, opts)?.llr)
}

/// Local LLRs of every RRH, `R × N`.
pub fn dtf_local_all(scenario: &Scenario, opts: &GampOptions) -> Result<Vec<Vec<f64>>> {
    let c = &scenario.config;
    (0..c.n_rrh)
        .map(|r| {
            dtf_local(
                &scenario.received_at(r),
                &scenario.signatures,
                &c.gamma_column(r),
                c.activation_prob,
                scenario.noise_var,
                opts,
            )
        })
        .collect()
}

/// Quantize each local LLR to its bin representative and sum over RRHs.
pub fn dtf_fuse(local_llrs: &[Vec<f64>], budget: &FronthaulBudget, calibration: Option<&LlrCalibration>) -> Result<Vec<f64>> {
    let calibration = calibration.ok_or_else(|| Error::config("DtF fusion needs an LLR calibration"))?;
    let q = calibration.quantizer(budget.llr_levels()?)?;
    fuse_with(local_llrs, &q)
}

/// Fusion with an explicit LLR quantizer.
pub fn fuse_with(local_llrs: &[Vec<f64>], quantizer: &QuantizerSpec) -> Result<Vec<f64>> {
    let n = local_llrs.first().map_or(0, Vec::len);
    if local_llrs.iter().any(|l| l.len() != n) {
        return Err(Error::config("every RRH must report the same number of LLRs"));
    }
    let mut fused = vec![0.0; n];
    for rrh in local_llrs {
        for (f, l) in fused.iter_mut().zip(rrh) {
            *f += quantizer.requantize(*l);
        }
    }
    Ok(fused)
}

/// Detect-and-forward end to end.
pub fn dtf_detect(
    scenario: &Scenario,
    budget: &FronthaulBudget,
    calibration: Option<&LlrCalibration>,
    opts: &GampOptions,
) -> Result<Vec<f64>> {
    dtf_fuse(&dtf_local_all(scenario, opts)?, budget, calibration)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityEstimate {
    pub lambda_hat: Vec<bool>,
    pub llr_used: Vec<f64>,
    pub threshold: f64,
    pub scheme: Scheme,
}

/// `λ̂_n = 1` iff `l_n ≥ threshold`.
pub fn threshold_test(llrs: &[f64], threshold: f64, scheme: Scheme) -> ActivityEstimate {
    ActivityEstimate {
        lambda_hat: llrs.iter().map(|&l| l >= threshold).collect(),
        llr_used: llrs.to_vec(),
        threshold,
        scheme,
    }
}

//! Seeded Monte Carlo experiments: ROC sweeps per (scheme, b, R) cell.
//!
//! Every trial owns a ChaCha8 stream derived from the master seed, the RRH
//! count index and the trial index, so results do not depend on how rayon
//! schedules the trials. Aggregation walks trials in index order.
//!
//! Within one trial all schemes and fronthaul rates see the same scenario.

pub mod check;
mod config;

use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{ExperimentConfig, ThresholdGrid};

use crate::detectors::{dtf_local_all, fuse_with, qf_detect_from, qf_quantize, FronthaulBudget, Scheme};
use crate::error::{Error, Result};
use crate::model::{Scenario, SystemConfig};
use crate::quantizer::LlrCalibration;

/// Largest tolerated fraction of failed trials per cell.
pub const MAX_FAILURE_RATE: f64 = 0.05;

const STREAM_EVALUATION: u64 = 0;
const STREAM_CALIBRATION: u64 = 1;

/// Random stream of one trial.
pub fn trial_rng(seed: u64, calibration: bool, rrh_index: usize, trial: usize) -> ChaCha8Rng {
    let purpose = if calibration { STREAM_CALIBRATION } else { STREAM_EVALUATION };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((purpose << 62) | ((rrh_index as u64) << 40) | trial as u64);
    rng
}

/// `(cdr, far)` of one trial; both are normalized by the number of active UEs.
pub fn metrics(truth: &[bool], estimate: &[bool]) -> Result<(f64, f64)> {
    if truth.len() != estimate.len() {
        return Err(Error::dims("activity estimate", truth.len(), estimate.len()));
    }
    let active = truth.iter().filter(|t| **t).count();
    if active == 0 {
        return Err(Error::Degenerate);
    }
    let (mut hits, mut false_alarms) = (0usize, 0usize);
    for (t, e) in truth.iter().zip(estimate) {
        match (t, e) {
            (true, true) => hits += 1,
            (false, true) => false_alarms += 1,
            _ => {}
        }
    }
    Ok((hits as f64 / active as f64, false_alarms as f64 / active as f64))
}

/// `(cdr, far)` at every threshold for one trial's LLRs.
pub fn sweep(truth: &[bool], llr: &[f64], thresholds: &[f64]) -> Result<Vec<(f64, f64)>> {
    if truth.len() != llr.len() {
        return Err(Error::dims("LLR vector", truth.len(), llr.len()));
    }
    thresholds
        .iter()
        .map(|&t| {
            let est: Vec<bool> = llr.iter().map(|&l| l >= t).collect();
            metrics(truth, &est)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub far_mean: f64,
    pub far_ci95: f64,
    pub cdr_mean: f64,
    pub cdr_ci95: f64,
}

/// ROC of one (scheme, b, R) cell, points in increasing threshold order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub scheme: Scheme,
    pub n_ues: usize,
    pub signature_len: usize,
    pub n_rrh: usize,
    pub activation_prob: f64,
    pub bits: u32,
    pub snr_db: f64,
    pub seed: u64,
    pub points: Vec<RocPoint>,
    /// Trials that entered the averages.
    pub n_trials: usize,
    /// Trials without active UEs.
    pub degenerate: usize,
    pub failures: usize,
}

impl RocCurve {
    pub fn label(&self) -> String {
        format!("{}/M={}/R={}/b={}", self.scheme, self.signature_len, self.n_rrh, self.bits)
    }

    /// `cdr` at `far_target`, interpolated between bracketing thresholds.
    pub fn cdr_at_far(&self, far_target: f64) -> Result<f64> {
        let pts: Vec<(f64, f64)> = self.points.iter().map(|p| (p.far_mean, p.cdr_mean)).collect();
        cdr_at_far(&pts, far_target)
    }

    /// 95% half-width of `cdr` at `far_target`, interpolated like the mean.
    pub fn cdr_ci_at_far(&self, far_target: f64) -> Result<f64> {
        let pts: Vec<(f64, f64)> = self.points.iter().map(|p| (p.far_mean, p.cdr_ci95)).collect();
        cdr_at_far(&pts, far_target)
    }
}

/// Linear interpolation of `(far, cdr)` points at `far_target`.
pub fn cdr_at_far(points: &[(f64, f64)], far_target: f64) -> Result<f64> {
    if let Some(&(_, c)) = points.iter().find(|(f, _)| *f == far_target) {
        return Ok(c);
    }
    for w in points.windows(2) {
        let ((f0, c0), (f1, c1)) = (w[0], w[1]);
        if (f0 - far_target) * (f1 - far_target) < 0.0 {
            return Ok(c0 + (c1 - c0) * (far_target - f0) / (f1 - f0));
        }
    }
    let finite = points.iter().map(|p| p.0).filter(|f| f.is_finite());
    let (min, max) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), f| (lo.min(f), hi.max(f)));
    Err(Error::OutOfRange {
        target: far_target,
        min,
        max,
    })
}

/// Mean and normal-approximation 95% half-width; the half-width is NaN below two samples.
pub fn mean_ci95(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * (var / n).sqrt())
}

/// Detector output of one trial in one cell, kept for debugging dumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub scheme: Scheme,
    pub n_rrh: usize,
    pub bits: u32,
    pub trial: usize,
    pub seed: u64,
    pub activity: Vec<bool>,
    pub llr: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub curves: Vec<RocCurve>,
    pub calibrations: Vec<(usize, LlrCalibration)>,
    pub records: Vec<TrialRecord>,
}

impl ExperimentResult {
    pub fn curve(&self, scheme: Scheme, n_rrh: usize, bits: u32) -> Option<&RocCurve> {
        self.curves
            .iter()
            .find(|c| c.scheme == scheme && c.n_rrh == n_rrh && c.bits == bits)
    }
}

/// LLR quantizer range for `system`, from local LLRs of calibration scenarios pooled over RRHs.
pub fn calibrate(cfg: &ExperimentConfig, system: &SystemConfig, rrh_index: usize) -> Result<LlrCalibration> {
    let runs: Vec<Result<Vec<Vec<f64>>>> = (0..cfg.calibration_trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(cfg.seed, true, rrh_index, t);
            let scenario = Scenario::draw(system, &mut rng)?;
            dtf_local_all(&scenario, &cfg.gamp)
        })
        .collect();
    let attempted = runs.len();
    let mut pooled = Vec::new();
    let mut failures = 0;
    for run in runs {
        match run {
            Ok(local) => pooled.extend(local.into_iter().flatten()),
            Err(e) => {
                log::warn!("calibration trial failed: {e}");
                failures += 1;
            }
        }
    }
    check_failure_rate(&format!("calibration/R={}", system.n_rrh), failures, attempted)?;
    LlrCalibration::from_samples(&pooled)
}

fn check_failure_rate(cell: &str, failures: usize, attempted: usize) -> Result<()> {
    let rate = failures as f64 / attempted.max(1) as f64;
    if rate > MAX_FAILURE_RATE {
        return Err(Error::FailureRate {
            cell: cell.to_string(),
            failures,
            attempted,
            rate,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Cell {
    scheme: Scheme,
    bits: u32,
}

struct TrialOutput {
    activity: Vec<bool>,
    cells: Vec<Result<Vec<f64>>>,
}

fn budget_check(ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(format!("{what} exceeds the fronthaul budget")))
    }
}

fn run_trial(
    cfg: &ExperimentConfig,
    system: &SystemConfig,
    cells: &[Cell],
    calibration: Option<&LlrCalibration>,
    rrh_index: usize,
    trial: usize,
) -> Result<TrialOutput> {
    let mut rng = trial_rng(cfg.seed, false, rrh_index, trial);
    let scenario = Scenario::draw(system, &mut rng)?;
    let local = if cells.iter().any(|c| c.scheme == Scheme::Dtf) {
        Some(dtf_local_all(&scenario, &cfg.gamp))
    } else {
        None
    };
    let outputs = cells
        .iter()
        .map(|cell| {
            let budget = FronthaulBudget::new(cell.bits, system.signature_len, system.n_ues);
            match cell.scheme {
                Scheme::Qf => {
                    let fronthaul = qf_quantize(&scenario, &budget)?;
                    let used = fronthaul.bits_per_rrh();
                    budget_check(used.iter().all(|&b| b == budget.capacity()), "QF payload")?;
                    Ok(qf_detect_from(&scenario, &fronthaul, &cfg.gamp)?.llr)
                }
                Scheme::Dtf => {
                    let local = match local.as_ref().expect("computed for DtF") {
                        Ok(l) => l,
                        Err(e) => return Err(Error::config(format!("local detection failed: {e}"))),
                    };
                    let calibration = calibration.ok_or_else(|| Error::config("DtF fusion needs an LLR calibration"))?;
                    let q = calibration.quantizer(budget.llr_levels()?)?;
                    budget_check(budget.dtf_bits_per_rrh()? <= budget.capacity(), "DtF payload")?;
                    fuse_with(local, &q)
                }
            }
        })
        .collect();
    Ok(TrialOutput {
        activity: scenario.activity,
        cells: outputs,
    })
}

/// Run every cell of `cfg`, optionally keeping per-trial records.
pub fn run_experiment_with(cfg: &ExperimentConfig, keep_records: bool) -> Result<ExperimentResult> {
    cfg.validate()?;
    let thresholds = cfg.thresholds.values()?;
    let cells: Vec<Cell> = cfg
        .schemes
        .iter()
        .flat_map(|&scheme| cfg.bits.iter().map(move |&bits| Cell { scheme, bits }))
        .collect();
    let mut curves = Vec::new();
    let mut calibrations = Vec::new();
    let mut records = Vec::new();
    for (rrh_index, &n_rrh) in cfg.rrh_counts.iter().enumerate() {
        let system = cfg.system(n_rrh)?;
        let calibration = if cfg.schemes.contains(&Scheme::Dtf) {
            let c = calibrate(cfg, &system, rrh_index)?;
            calibrations.push((n_rrh, c));
            Some(c)
        } else {
            None
        };
        let trials: Vec<Result<TrialOutput>> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| run_trial(cfg, &system, &cells, calibration.as_ref(), rrh_index, t))
            .collect();
        let mut per_cell: Vec<(Vec<Vec<(f64, f64)>>, usize, usize)> = vec![(Vec::new(), 0, 0); cells.len()];
        for (t, outcome) in trials.into_iter().enumerate() {
            let out = match outcome {
                Ok(o) => o,
                Err(e) => {
                    log::warn!("trial {t} at R={n_rrh} failed: {e}");
                    for slot in per_cell.iter_mut() {
                        slot.2 += 1;
                    }
                    continue;
                }
            };
            let degenerate = !out.activity.iter().any(|a| *a);
            for ((cell, result), slot) in cells.iter().zip(out.cells).zip(per_cell.iter_mut()) {
                match result {
                    Ok(llr) => {
                        if degenerate {
                            slot.1 += 1;
                        } else {
                            slot.0.push(sweep(&out.activity, &llr, &thresholds)?);
                        }
                        if keep_records {
                            records.push(TrialRecord {
                                scheme: cell.scheme,
                                n_rrh,
                                bits: cell.bits,
                                trial: t,
                                seed: cfg.seed,
                                activity: out.activity.clone(),
                                llr,
                            });
                        }
                    }
                    Err(e) => {
                        log::warn!("trial {t} in cell {}/R={n_rrh}/b={} failed: {e}", cell.scheme, cell.bits);
                        slot.2 += 1;
                    }
                }
            }
        }
        for (cell, (sweeps, degenerate, failures)) in cells.iter().zip(per_cell) {
            let label = format!("{}/M={}/R={}/b={}", cell.scheme, cfg.signature_len, n_rrh, cell.bits);
            check_failure_rate(&label, failures, cfg.trials)?;
            let points = thresholds
                .iter()
                .enumerate()
                .map(|(k, &threshold)| {
                    let cdr: Vec<f64> = sweeps.iter().map(|s| s[k].0).collect();
                    let far: Vec<f64> = sweeps.iter().map(|s| s[k].1).collect();
                    let (cdr_mean, cdr_ci95) = mean_ci95(&cdr);
                    let (far_mean, far_ci95) = mean_ci95(&far);
                    RocPoint {
                        threshold,
                        far_mean,
                        far_ci95,
                        cdr_mean,
                        cdr_ci95,
                    }
                })
                .collect();
            curves.push(RocCurve {
                scheme: cell.scheme,
                n_ues: cfg.n_ues,
                signature_len: cfg.signature_len,
                n_rrh,
                activation_prob: cfg.activation_prob,
                bits: cell.bits,
                snr_db: cfg.snr_db,
                seed: cfg.seed,
                points,
                n_trials: sweeps.len(),
                degenerate,
                failures,
            });
        }
    }
    Ok(ExperimentResult {
        curves,
        calibrations,
        records,
    })
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    run_experiment_with(cfg, false)
}

pub const CSV_HEADER: &str =
    "scheme,N,M,R,p,b,snr_db,threshold,far_mean,far_ci95,cdr_mean,cdr_ci95,trials,failures,seed";

/// One row per threshold per cell, cells in the order given.
pub fn render_csv(curves: &[RocCurve]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for c in curves {
        for p in &c.points {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                c.scheme,
                c.n_ues,
                c.signature_len,
                c.n_rrh,
                c.activation_prob,
                c.bits,
                c.snr_db,
                p.threshold,
                p.far_mean,
                p.far_ci95,
                p.cdr_mean,
                p.cdr_ci95,
                c.n_trials,
                c.failures,
                c.seed
            )
            .expect("writing to a String");
        }
    }
    out
}

pub fn emit_csv(curves: &[RocCurve], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, render_csv(curves)).map_err(|e| Error::io(path, e))
}

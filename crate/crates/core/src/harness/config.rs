use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::detectors::Scheme;
use crate::error::{Error, Result};
use crate::gamp::GampOptions;
use crate::model::SystemConfig;

/// LLR thresholds swept for the ROC, either a uniform range or an explicit list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ThresholdGrid {
    Range { min: f64, max: f64, points: usize },
    List(Vec<f64>),
}

impl Default for ThresholdGrid {
    fn default() -> Self {
        ThresholdGrid::Range {
            min: -15.0,
            max: 15.0,
            points: 61,
        }
    }
}

impl ThresholdGrid {
    /// Thresholds in increasing order.
    pub fn values(&self) -> Result<Vec<f64>> {
        let mut out = match self {
            ThresholdGrid::Range { min, max, points } => {
                if *points == 0 || !(min.is_finite() && max.is_finite()) || min > max {
                    return Err(Error::config(format!("invalid threshold range [{min}, {max}] × {points}")));
                }
                if *points == 1 {
                    vec![*min]
                } else {
                    let step = (max - min) / (*points - 1) as f64;
                    (0..*points).map(|k| min + k as f64 * step).collect()
                }
            }
            ThresholdGrid::List(v) => v.clone(),
        };
        if out.is_empty() || out.iter().any(|t| t.is_nan()) {
            return Err(Error::config("threshold grid must be nonempty and free of NaN"));
        }
        out.sort_by(f64::total_cmp);
        out.dedup();
        Ok(out)
    }
}

fn default_calibration_trials() -> usize {
    200
}

fn default_schemes() -> Vec<Scheme> {
    vec![Scheme::Qf]
}

fn default_gain() -> f64 {
    1.0
}

/// Monte Carlo experiment over a grid of RRH counts, schemes and fronthaul rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_ues: usize,
    pub signature_len: usize,
    pub rrh_counts: Vec<usize>,
    pub activation_prob: f64,
    pub snr_db: f64,
    /// Defaults to `M`.
    #[serde(default)]
    pub signature_energy: Option<f64>,
    /// Uniform large-scale gain γ applied to every UE–RRH pair.
    #[serde(default = "default_gain")]
    pub large_scale_gain: f64,
    #[serde(default = "default_schemes")]
    pub schemes: Vec<Scheme>,
    pub bits: Vec<u32>,
    #[serde(default)]
    pub thresholds: ThresholdGrid,
    pub trials: usize,
    #[serde(default = "default_calibration_trials")]
    pub calibration_trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub gamp: GampOptions,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.rrh_counts.is_empty() || self.bits.is_empty() || self.schemes.is_empty() {
            return Err(Error::config("rrh_counts, bits and schemes must be nonempty"));
        }
        if self.trials == 0 {
            return Err(Error::config("trials must be at least 1"));
        }
        if self.schemes.contains(&Scheme::Dtf) && self.calibration_trials == 0 {
            return Err(Error::config("DtF needs at least one calibration trial"));
        }
        if !(self.large_scale_gain >= 0.0 && self.large_scale_gain.is_finite()) {
            return Err(Error::config(format!("invalid large_scale_gain {}", self.large_scale_gain)));
        }
        self.thresholds.values()?;
        self.gamp.validate()?;
        for &r in &self.rrh_counts {
            self.system(r)?;
        }
        Ok(())
    }

    /// System parameters of the cell with `n_rrh` RRHs.
    pub fn system(&self, n_rrh: usize) -> Result<SystemConfig> {
        let mut cfg = SystemConfig::dense(self.n_ues, self.signature_len, n_rrh, self.activation_prob, self.snr_db)?;
        if let Some(es) = self.signature_energy {
            cfg.signature_energy = es;
        }
        cfg.with_gamma(vec![self.large_scale_gain; self.n_ues * n_rrh])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
n_ues = 8
signature_len = 16
rrh_counts = [1, 2]
activation_prob = 0.25
snr_db = 0.0
bits = [4]
trials = 3
seed = 7
"#;

    #[test]
    fn defaults_fill_in() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.schemes, vec![Scheme::Qf]);
        assert_eq!(cfg.calibration_trials, 200);
        let t = cfg.thresholds.values().unwrap();
        assert_eq!(t.len(), 61);
        assert_eq!((t[0], t[30], t[60]), (-15.0, 0.0, 15.0));
        assert_eq!(cfg.gamp, GampOptions::default());
        assert_eq!(cfg.system(2).unwrap().signature_energy, 16.0);
    }

    #[test]
    fn explicit_threshold_list_and_round_trip() {
        let text = format!("{MINIMAL}thresholds = [1.0, -1.0, 0.0]\nschemes = [\"qf\", \"dtf\"]\n");
        let cfg = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(cfg.thresholds.values().unwrap(), vec![-1.0, 0.0, 1.0]);
        assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(ExperimentConfig::from_toml(&MINIMAL.replace("trials = 3", "trials = 0")).is_err());
        assert!(ExperimentConfig::from_toml(&MINIMAL.replace("[1, 2]", "[]")).is_err());
        assert!(ExperimentConfig::from_toml(&format!("{MINIMAL}bogus = 1\n")).is_err());
        assert!(ExperimentConfig::from_toml(&MINIMAL.replace("0.25", "1.5")).is_err());
    }
}

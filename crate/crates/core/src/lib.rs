//! User activity detection in a cloud radio access network.
//!
//! Remote radio heads (RRHs) receive non-orthogonal signatures from sporadically
//! active user equipments (UEs) and reach a central unit (CU) over
//! rate-limited fronthaul links. Two strategies are implemented on top of a
//! hybrid GAMP detector:
//!
//! * quantize-and-forward (QF): RRHs quantize their samples, the CU detects jointly;
//! * detect-and-forward (DtF): RRHs detect locally and forward quantized LLRs.
//!
//! [`harness`] runs seeded Monte Carlo ROC sweeps and [`oracle`] provides brute-force
//! references for tests.

pub mod detectors;
pub mod error;
pub mod gamp;
pub mod harness;
pub mod hgamp;
pub mod model;
pub mod operator;
pub mod oracle;
pub mod quantizer;
pub mod special;

pub use detectors::{
    cu_detect_unquantized, dtf_detect, dtf_fuse, dtf_local, dtf_local_all, qf_detect, threshold_test, ActivityEstimate,
    FronthaulBudget, Scheme,
};
pub use error::{Error, Result};
pub use gamp::{input_denoise, run_gamp, trunc_gauss_moments, GampOptions, OutputChannel};
pub use harness::{cdr_at_far, emit_csv, metrics, run_experiment, ExperimentConfig, RocCurve};
pub use hgamp::{coord_llr, hgamp_run, GroupStructure, PosteriorSummary};
pub use model::{Scenario, SystemConfig};
pub use quantizer::{design_llr_quantizer, design_sample_quantizer, LlrCalibration, QuantizerSpec};

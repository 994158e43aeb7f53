use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use cran_uad::harness::check::{oracle_checks, render_checks};
use cran_uad::harness::{calibrate, render_csv, run_experiment_with, ExperimentConfig};
use cran_uad::{Error, Scheme};

#[derive(Parser)]
#[command(name = "cran-uad", version, about = "User activity detection in capacity-limited C-RAN")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of trials.
    #[arg(long)]
    trials: Option<usize>,
    /// Output file; defaults to the config's `output` or stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte Carlo experiment and write the ROC CSV.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Also dump per-trial LLRs as JSON lines.
        #[arg(long)]
        records: Option<PathBuf>,
    },
    /// Like `simulate`, and print cdr at a target false-alarm ratio per cell.
    Roc {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.2)]
        far: f64,
    },
    /// Fit the DtF LLR quantizer range for every RRH count and print it as JSON.
    Calibrate {
        #[command(flatten)]
        common: Common,
    },
    /// Compare the detector against the brute-force oracles.
    OracleCheck {
        #[command(flatten)]
        common: Common,
        /// Random points per scalar kernel.
        #[arg(long, default_value_t = 10_000)]
        points: usize,
    },
}

const EXIT_FAILURE_RATE: u8 = 2;
const EXIT_ORACLE: u8 = 3;

fn load(common: &Common) -> Result<ExperimentConfig> {
    let path = common.config.as_ref().context("--config is required for this subcommand")?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = common.trials {
        cfg.trials = trials;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn out_path<'a>(common: &'a Common, cfg: Option<&'a ExperimentConfig>) -> Option<&'a Path> {
    common.out.as_deref().or_else(|| cfg.and_then(|c| c.output.as_deref()))
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Simulate { common, records } => {
            let cfg = load(&common)?;
            let result = run_experiment_with(&cfg, records.is_some())?;
            write_output(out_path(&common, Some(&cfg)), &render_csv(&result.curves))?;
            if let Some(path) = records {
                let mut text = String::new();
                for r in &result.records {
                    text.push_str(&serde_json::to_string(r)?);
                    text.push('\n');
                }
                std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
            }
        }
        Command::Roc { common, far } => {
            let cfg = load(&common)?;
            let result = run_experiment_with(&cfg, false)?;
            write_output(out_path(&common, Some(&cfg)), &render_csv(&result.curves))?;
            for curve in &result.curves {
                match (curve.cdr_at_far(far), curve.cdr_ci_at_far(far)) {
                    (Ok(cdr), Ok(ci)) => eprintln!("{:<24} cdr@far={far}: {cdr:.4} ± {ci:.4}", curve.label()),
                    (Err(e), _) | (_, Err(e)) => eprintln!("{:<24} {e}", curve.label()),
                }
            }
        }
        Command::Calibrate { common } => {
            let mut cfg = load(&common)?;
            if !cfg.schemes.contains(&Scheme::Dtf) {
                cfg.schemes.push(Scheme::Dtf);
            }
            let mut table = Vec::new();
            for (k, &n_rrh) in cfg.rrh_counts.iter().enumerate() {
                let cal = calibrate(&cfg, &cfg.system(n_rrh)?, k)?;
                table.push(serde_json::json!({ "n_rrh": n_rrh, "calibration": cal }));
            }
            write_output(out_path(&common, Some(&cfg)), &(serde_json::to_string_pretty(&table)? + "\n"))?;
        }
        Command::OracleCheck { common, points } => {
            let cfg = match &common.config {
                Some(_) => Some(load(&common)?),
                None => None,
            };
            let seed = common.seed.or(cfg.as_ref().map(|c| c.seed)).unwrap_or(0);
            let instances = common.trials.unwrap_or(100);
            let checks = oracle_checks(points, instances, seed)?;
            eprint!("{}", render_checks(&checks));
            if let Some(path) = out_path(&common, cfg.as_ref()) {
                write_output(Some(path), &(serde_json::to_string_pretty(&checks)? + "\n"))?;
            }
            if checks.iter().any(|c| !c.passed) {
                return Ok(ExitCode::from(EXIT_ORACLE));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<Error>() {
                Some(Error::FailureRate { .. }) => ExitCode::from(EXIT_FAILURE_RATE),
                _ => ExitCode::FAILURE,
            }
        }
    }
}

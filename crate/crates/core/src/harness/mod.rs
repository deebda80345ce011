//! Configuration, experiment runners, metrics and run artifacts.

pub mod arbitration;
pub mod charlm;
pub mod config;
pub mod memorize;
pub mod metrics;
pub mod saccade;
pub mod skinner;

use std::path::{Path, PathBuf};

pub use config::RunConfig;
pub use metrics::{format_g9, write_csv, Metrics, MetricsRow};

use crate::checkpoint::Checkpoint;
use crate::error::{Error, Result};
use crate::gradcheck::{self, GradCheckConfig};
use crate::modulation::ModulatorConfig;

pub const EXPERIMENTS: [&str; 5] = ["charlm", "saccade", "arbitration", "skinner", "gradcheck"];

/// Largest relative gradient error accepted by the gradcheck run.
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;

pub fn modulator_config(cfg: &RunConfig) -> ModulatorConfig {
    ModulatorConfig {
        alpha: cfg.real("modulation", "alpha"),
        tau: cfg.real("modulation", "tau"),
        m_min: cfg.real("modulation", "m_min"),
        m_max: cfg.real("modulation", "m_max"),
        intrinsic_gain: cfg.real("modulation", "intrinsic_gain"),
        err_smooth: cfg.real("modulation", "err_smooth"),
    }
}

/// Everything a run leaves behind.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub metrics: Metrics,
    pub checkpoint: Checkpoint,
    /// Extra named files (preference table, episode dump).
    pub extra: Vec<(String, Vec<u8>)>,
}

fn gradcheck_run(cfg: &RunConfig) -> Result<RunOutput> {
    let gc = GradCheckConfig {
        instances: cfg.usize("env", "gc_instances"),
        max_dim: cfg.usize("env", "gc_max_dim"),
        step: cfg.real("env", "gc_step"),
        seed: cfg.seed(),
    };
    let report = gradcheck::run(&gc)?;
    let mut metrics = Metrics::default();
    for (i, (a, e)) in report.ar_errors.iter().zip(&report.ae_errors).enumerate() {
        metrics.push(i as u64, "ar", "rel_error", *a);
        metrics.push(i as u64, "ae", "rel_error", *e);
    }
    let end = report.ar_errors.len() as u64;
    metrics.push(end, "gradcheck", "max_rel_error", report.max_rel_error());
    let mut checkpoint = Checkpoint::new();
    checkpoint.put_reals("ar_errors", report.ar_errors.clone());
    checkpoint.put_reals("ae_errors", report.ae_errors.clone());
    if report.max_rel_error() > GRADCHECK_TOLERANCE {
        return Err(Error::contract(format!(
            "gradient check failed: max relative error {} exceeds {GRADCHECK_TOLERANCE}",
            report.max_rel_error()
        )));
    }
    Ok(RunOutput {
        metrics,
        checkpoint,
        extra: Vec::new(),
    })
}

/// Runs one experiment in memory.
pub fn run_experiment(name: &str, cfg: &RunConfig) -> Result<RunOutput> {
    let resume = cfg.str("general", "resume");
    if !resume.is_empty() && name != "charlm" {
        return Err(Error::Config(format!("resume is supported for charlm only, not {name}")));
    }
    match name {
        "charlm" => {
            let ckpt = if resume.is_empty() {
                None
            } else {
                Some(Checkpoint::load(Path::new(resume))?)
            };
            let ticks = cfg.ticks_or(charlm::DEFAULT_TICKS);
            let (lm, metrics) = charlm::run(cfg, ticks, ckpt.as_ref())?;
            let mut checkpoint = Checkpoint::new();
            lm.save(&mut checkpoint);
            Ok(RunOutput {
                metrics,
                checkpoint,
                extra: Vec::new(),
            })
        }
        "saccade" => {
            let (metrics, checkpoint) = saccade::run(cfg)?;
            Ok(RunOutput {
                metrics,
                checkpoint,
                extra: Vec::new(),
            })
        }
        "arbitration" => {
            let (metrics, checkpoint, prefs) = arbitration::run(cfg)?;
            Ok(RunOutput {
                metrics,
                checkpoint,
                extra: vec![("preferences.csv".into(), prefs)],
            })
        }
        "skinner" => {
            let (metrics, checkpoint, episodes) = skinner::run(cfg)?;
            Ok(RunOutput {
                metrics,
                checkpoint,
                extra: vec![("episodes.csv".into(), episodes)],
            })
        }
        "gradcheck" => gradcheck_run(cfg),
        other => Err(Error::Config(format!(
            "unknown experiment `{other}`; expected one of {}",
            EXPERIMENTS.join(", ")
        ))),
    }
}

/// Effective output directory: `[general] out_dir` when set explicitly,
/// else `MHPM_OUT`, else the default.
pub fn out_dir(cfg: &RunConfig) -> PathBuf {
    if !cfg.is_explicit("general", "out_dir") {
        if let Ok(dir) = std::env::var("MHPM_OUT") {
            if !dir.is_empty() {
                return PathBuf::from(dir);
            }
        }
    }
    PathBuf::from(cfg.str("general", "out_dir"))
}

/// Writes metrics.csv, config-echo.txt, checkpoint.txt and any extra files.
pub fn write_artifacts(out: &RunOutput, cfg: &RunConfig, dir: &Path) -> Result<()> {
    let io = |p: &Path, e: std::io::Error| Error::Io(format!("{}: {e}", p.display()));
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let csv = out.metrics.to_csv()?;
    let mut files: Vec<(String, Vec<u8>)> = vec![
        ("metrics.csv".into(), csv),
        ("config-echo.txt".into(), cfg.echo().into_bytes()),
        ("checkpoint.txt".into(), out.checkpoint.to_text().into_bytes()),
    ];
    files.extend(out.extra.iter().cloned());
    for (name, bytes) in files {
        let p = dir.join(name);
        std::fs::write(&p, bytes).map_err(|e| io(&p, e))?;
    }
    Ok(())
}

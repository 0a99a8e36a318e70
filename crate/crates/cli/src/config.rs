//! Run configuration: one JSON document per run. Relative paths inside it
//! resolve against the directory holding the document.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use roughvol_core::calibrate::CalibrationConfig;
use roughvol_core::model::ModelParams;
use roughvol_core::pricer::{Estimator, OptionSpec, DESK_PATHS, PRODUCTION_STEPS_PER_YEAR};
use roughvol_core::synth::SynthSpec;
use roughvol_core::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainInput {
    pub csv: PathBuf,
    pub meta: PathBuf,
}

fn default_paths() -> usize {
    DESK_PATHS
}
fn default_steps() -> u32 {
    PRODUCTION_STEPS_PER_YEAR
}
fn default_repetitions() -> usize {
    100
}
fn default_alpha() -> f64 {
    0.05
}
fn default_samples() -> usize {
    200
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriceSection {
    pub params: ModelParams,
    #[serde(default = "default_paths")]
    pub path_count: usize,
    #[serde(default = "default_steps")]
    pub steps_per_year: u32,
    #[serde(default)]
    pub estimator: Estimator,
    /// Options to price; the chain's options when absent.
    #[serde(default)]
    pub options: Option<Vec<OptionSpec>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapSection {
    #[serde(default = "default_samples")]
    pub sample_count: usize,
    /// Starting point of every bootcalibration.
    #[serde(default)]
    pub overall_theta: Option<ModelParams>,
    /// Calibration result whose `theta` is the starting point.
    #[serde(default)]
    pub overall_calibration: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivitySection {
    pub bootstrap_report: PathBuf,
    #[serde(default = "default_alpha")]
    pub alpha_level: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignificanceSection {
    pub full: PathBuf,
    pub restricted: PathBuf,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default = "default_paths")]
    pub path_count: usize,
    #[serde(default = "default_steps")]
    pub steps_per_year: u32,
    #[serde(default)]
    pub estimator: Estimator,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportSection {
    #[serde(default)]
    pub label: Option<String>,
    pub bootstrap_report: PathBuf,
    #[serde(default)]
    pub calibration: Option<PathBuf>,
    #[serde(default)]
    pub sensitivity: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    /// Base seed of every random stream; `--seed` overrides it.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub chain: Option<ChainInput>,
    #[serde(default)]
    pub synth: Option<SynthSpec>,
    #[serde(default)]
    pub pricing: Option<PriceSection>,
    #[serde(default)]
    pub calibration: Option<CalibrationConfig>,
    #[serde(default)]
    pub bootstrap: Option<BootstrapSection>,
    #[serde(default)]
    pub sensitivity: Option<SensitivitySection>,
    #[serde(default)]
    pub significance: Option<SignificanceSection>,
    #[serde(default)]
    pub report: Option<ReportSection>,
}

/// Reads a whole file, reporting the path on failure.
pub fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source }.into())
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_file(path)?;
    serde_json::from_str(&text).map_err(|source| Error::Json { path: path.into(), source }.into())
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg: RunConfig = read_json(path)?;
        if cfg.schema_version != SCHEMA_VERSION {
            bail!("unsupported schema_version {} in {} (expected {SCHEMA_VERSION})", cfg.schema_version, path.display());
        }
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        if let Some(c) = &mut cfg.chain {
            resolve(&base, &mut c.csv);
            resolve(&base, &mut c.meta);
        }
        if let Some(b) = &mut cfg.bootstrap {
            if let Some(p) = &mut b.overall_calibration {
                resolve(&base, p);
            }
        }
        if let Some(s) = &mut cfg.sensitivity {
            resolve(&base, &mut s.bootstrap_report);
        }
        if let Some(s) = &mut cfg.significance {
            resolve(&base, &mut s.full);
            resolve(&base, &mut s.restricted);
        }
        if let Some(r) = &mut cfg.report {
            resolve(&base, &mut r.bootstrap_report);
            for p in [&mut r.calibration, &mut r.sensitivity].into_iter().flatten() {
                resolve(&base, p);
            }
        }
        Ok(cfg)
    }

    pub fn chain(&self) -> Result<&ChainInput> {
        self.chain.as_ref().context("config has no `chain` section")
    }

    /// Calibration settings with the run seed applied.
    pub fn calibration(&self) -> CalibrationConfig {
        self.calibration.clone().unwrap_or_default().with_seed(self.seed)
    }
}

//! Bootstrap robustness of a calibration.
//!
//! Each bootcalibration refits the model to a resample (with replacement) of
//! the option structure, starting from the overall calibration, and then
//! prices the original options at its estimate. The resulting table of
//! estimates and prices feeds the robustness statistics.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibrate::{refine_objective, CalibrationConfig, Objective};
use crate::descriptive::{iqr, mean, quantile_sorted, sample_variance};
use crate::error::{domain, Error, Result};
use crate::market::OptionStructure;
use crate::model::{ModelParams, PARAM_NAMES};
use crate::rng::{derive_seed, stream_rng, Stream};

fn default_samples() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapPlan {
    #[serde(default = "default_samples")]
    pub sample_count: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub calibration: CalibrationConfig,
}

impl BootstrapPlan {
    pub fn validate(&self) -> Result<()> {
        if self.sample_count == 0 {
            return domain("sample_count must be at least 1");
        }
        self.calibration.validate()
    }

    /// Seed of bootcalibration `j`; drives both its resample and its paths.
    pub fn sample_seed(&self, j: usize) -> u64 {
        derive_seed(self.base_seed, Stream::BootSample, j as u64)
    }
}

/// A resample of an option structure. `indices` are 0-based positions in the
/// original structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootSample {
    pub indices: Vec<usize>,
    pub structure: OptionStructure,
}

/// `n` indices drawn uniformly with replacement.
pub fn sample_indices(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = stream_rng(seed, Stream::Resample, 0);
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

pub fn sample_from_indices(structure: &OptionStructure, indices: Vec<usize>) -> Result<BootSample> {
    if let Some(&bad) = indices.iter().find(|&&i| i >= structure.len()) {
        return domain(format!("index {bad} outside a structure of {} options", structure.len()));
    }
    Ok(BootSample { structure: structure.select(&indices), indices })
}

pub fn bootstrap_structure(structure: &OptionStructure, seed: u64) -> Result<BootSample> {
    if structure.is_empty() {
        return domain("cannot resample an empty structure");
    }
    sample_from_indices(structure, sample_indices(structure.len(), seed))
}

/// Outcome of one bootcalibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bootcalibration {
    pub sample: usize,
    pub seed: u64,
    pub indices: Vec<usize>,
    pub theta: ModelParams,
    /// Objective on the resample.
    pub objective: f64,
    /// Model prices of the original options at `theta`.
    pub model_prices: Vec<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootFailure {
    pub sample: usize,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootRun {
    pub overall: ModelParams,
    /// Parameters the bootcalibrations were free to move.
    pub free_parameters: Vec<usize>,
    pub results: Vec<Bootcalibration>,
    pub failures: Vec<BootFailure>,
}

fn bootcalibrate(
    structure: &OptionStructure,
    overall: &ModelParams,
    plan: &BootstrapPlan,
    j: usize,
) -> Result<Bootcalibration> {
    let seed = plan.sample_seed(j);
    let indices = sample_indices(structure.len(), seed);
    let config = plan.calibration.with_seed(seed);
    // the sample is fitted through repeated terms, so pricing stays on the
    // original grid
    let obj = Objective::on_terms(structure, indices.clone(), config.pricing())?;
    let fit = refine_objective(&obj, overall, &config, None)?;
    Ok(Bootcalibration {
        sample: j,
        seed,
        indices,
        theta: fit.theta,
        objective: fit.objective,
        model_prices: fit.model_prices,
        iterations: fit.diagnostics.local.iterations,
    })
}

/// Runs `plan.sample_count` bootcalibrations started from `overall`. Failed
/// samples are recorded and skipped.
pub fn run_bootcalibrations(structure: &OptionStructure, overall: &ModelParams, plan: &BootstrapPlan) -> Result<BootRun> {
    plan.validate()?;
    if structure.is_empty() {
        return domain("cannot resample an empty structure");
    }
    let weighted = structure.with_weight_rule(plan.calibration.weight_rule);
    let outcomes: Vec<Result<Bootcalibration>> = (0..plan.sample_count)
        .into_par_iter()
        .map(|j| bootcalibrate(&weighted, overall, plan, j))
        .collect();
    let mut results = Vec::new();
    let mut failures = Vec::new();
    for (j, out) in outcomes.into_iter().enumerate() {
        match out {
            Ok(r) => results.push(r),
            Err(e) => {
                log::warn!("bootcalibration {j} failed: {e}");
                failures.push(BootFailure { sample: j, seed: plan.sample_seed(j), message: e.to_string() });
            }
        }
    }
    if !failures.is_empty() {
        log::warn!("{} of {} bootcalibrations failed", failures.len(), plan.sample_count);
    }
    Ok(BootRun {
        overall: *overall,
        free_parameters: plan.calibration.effective_bounds().free(),
        results,
        failures,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamDispersion {
    pub name: String,
    pub free: bool,
    pub mean: f64,
    pub iqr: f64,
    /// `IQR / |mean|`; absent when the mean is zero.
    pub relative_iqr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IqrSummary {
    pub per_parameter: Vec<ParamDispersion>,
    /// Average and maximum relative IQR over the free parameters.
    pub average: f64,
    pub max: f64,
}

/// Dispersion of the per-bootcalibration average relative errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootAreSummary {
    pub range: f64,
    pub iqr: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReport {
    pub sample_count: usize,
    pub failed: usize,
    pub overall_theta: ModelParams,
    pub theta_samples: Vec<ModelParams>,
    pub theta_hat: ModelParams,
    pub price_hat: Vec<f64>,
    pub bre: Vec<f64>,
    pub v: Vec<f64>,
    /// AARE of each bootcalibration against the original chain.
    pub aare_per_sample: Vec<f64>,
    /// ARFV of each bootcalibration against the original chain.
    pub arfv_per_sample: Vec<f64>,
    pub iqr_summary: IqrSummary,
    pub boot_are_summary: BootAreSummary,
}

pub fn bootstrap_statistics(run: &BootRun, structure: &OptionStructure) -> Result<BootstrapReport> {
    let m = run.results.len();
    if m < 2 {
        return Err(Error::Insufficient(format!("bootstrap statistics need at least 2 bootcalibrations, got {m}")));
    }
    let n = structure.len();
    if let Some(r) = run.results.iter().find(|r| r.model_prices.len() != n) {
        return domain(format!("bootcalibration {} has {} prices for {n} options", r.sample, r.model_prices.len()));
    }
    let market = structure.market_prices();
    let spot = structure.env.spot;

    let columns: Vec<Vec<f64>> =
        (0..5).map(|k| run.results.iter().map(|r| r.theta.to_array()[k]).collect()).collect();
    let theta_hat = ModelParams::from_array(std::array::from_fn(|k| mean(&columns[k])));

    let mut price_hat = vec![0.0; n];
    let mut bre = vec![0.0; n];
    let mut v = vec![0.0; n];
    for i in 0..n {
        let prices: Vec<f64> = run.results.iter().map(|r| r.model_prices[i]).collect();
        price_hat[i] = mean(&prices);
        bre[i] = (price_hat[i] - market[i]).abs() / market[i];
        let rel: Vec<f64> = prices.iter().map(|c| (c - market[i]).abs() / market[i]).collect();
        v[i] = sample_variance(&rel);
    }

    let aare_per_sample: Vec<f64> = run
        .results
        .iter()
        .map(|r| r.model_prices.iter().zip(&market).map(|(c, k)| (c - k).abs() / k).sum::<f64>() / n as f64)
        .collect();
    let arfv_per_sample: Vec<f64> = run
        .results
        .iter()
        .map(|r| r.model_prices.iter().zip(&market).map(|(c, k)| (c - k).abs() / spot).sum::<f64>() / n as f64)
        .collect();

    let per_parameter: Vec<ParamDispersion> = (0..5)
        .map(|k| {
            let mu = mean(&columns[k]);
            let spread = iqr(&columns[k]);
            ParamDispersion {
                name: PARAM_NAMES[k].to_string(),
                free: run.free_parameters.contains(&k),
                mean: mu,
                iqr: spread,
                relative_iqr: (mu != 0.0).then(|| spread / mu.abs()),
            }
        })
        .collect();
    let rel: Vec<f64> = per_parameter.iter().filter(|p| p.free).filter_map(|p| p.relative_iqr).collect();
    let (average, max) = if rel.is_empty() {
        (0.0, 0.0)
    } else {
        (mean(&rel), rel.iter().copied().fold(f64::NEG_INFINITY, f64::max))
    };

    let mut sorted = aare_per_sample.clone();
    sorted.sort_by(f64::total_cmp);
    let boot_are_summary = BootAreSummary {
        range: sorted[m - 1] - sorted[0],
        iqr: quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25),
        std: sample_variance(&sorted).sqrt(),
    };

    Ok(BootstrapReport {
        sample_count: m,
        failed: run.failures.len(),
        overall_theta: run.overall,
        theta_samples: run.results.iter().map(|r| r.theta).collect(),
        theta_hat,
        price_hat,
        bre,
        v,
        aare_per_sample,
        arfv_per_sample,
        iqr_summary: IqrSummary { per_parameter, average, max },
        boot_are_summary,
    })
}

/// Histogram bins by the Freedman–Diaconis rule, `[lo, hi)` with the last bin
/// closed. Constant data gives one bin.
pub fn freedman_diaconis(data: &[f64]) -> Vec<(f64, f64, usize)> {
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
    let spread = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let range = hi - lo;
    let bins = if range > 0.0 && spread > 0.0 {
        let width = 2.0 * spread / (sorted.len() as f64).cbrt();
        ((range / width).ceil() as usize).clamp(1, sorted.len())
    } else {
        1
    };
    let width = range / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in &sorted {
        let b = if width > 0.0 { (((x - lo) / width) as usize).min(bins - 1) } else { 0 };
        counts[b] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(b, c)| {
            let l = lo + width * b as f64;
            let h = if b + 1 == bins { hi } else { lo + width * (b + 1) as f64 };
            (l, h, c)
        })
        .collect()
}

pub const SCATTER_HEADER: &str = "kind,x_param,y_param,lo,hi,count,x,y,label";

/// Writes scatter-matrix data: one histogram per parameter, the paired
/// samples of every parameter pair, and marker rows for the bootstrap mean
/// and the overall estimate.
pub fn export_scatter_matrix<W: Write>(
    theta_samples: &[ModelParams],
    theta_hat: &ModelParams,
    overall: &ModelParams,
    mut out: W,
) -> Result<()> {
    if theta_samples.len() < 2 {
        return Err(Error::Insufficient("scatter matrix needs at least 2 samples".into()));
    }
    let cols: Vec<Vec<f64>> = (0..5).map(|k| theta_samples.iter().map(|t| t.to_array()[k]).collect()).collect();
    let io = |e: std::io::Error| Error::Io { path: "<scatter>".into(), source: e };
    writeln!(out, "{SCATTER_HEADER}").map_err(io)?;
    for (k, col) in cols.iter().enumerate() {
        for (lo, hi, count) in freedman_diaconis(col) {
            writeln!(out, "hist,{},,{lo},{hi},{count},,,", PARAM_NAMES[k]).map_err(io)?;
        }
    }
    for a in 0..5 {
        for b in a + 1..5 {
            for (x, y) in cols[a].iter().zip(&cols[b]) {
                writeln!(out, "pair,{},{},,,,{x},{y},", PARAM_NAMES[a], PARAM_NAMES[b]).map_err(io)?;
            }
        }
    }
    for (label, theta) in [("theta_hat", theta_hat), ("overall", overall)] {
        for (k, value) in theta.to_array().iter().enumerate() {
            writeln!(out, "marker,{},,,,,{value},,{label}", PARAM_NAMES[k]).map_err(io)?;
        }
    }
    Ok(())
}

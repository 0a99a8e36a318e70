use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use roughvol_core::bootstrap::{bootstrap_statistics, export_scatter_matrix, run_bootcalibrations, BootstrapPlan, BootstrapReport};
use roughvol_core::calibrate::{calibrate, summary_row, CalibrationResult, SUMMARY_HEADER};
use roughvol_core::market::{load_chain_with_rule, market_meta, write_chain_csv, OptionStructure, WeightRule};
use roughvol_core::model::{MarketEnv, ModelParams, PARAM_NAMES};
use roughvol_core::pricer::{ChainPricer, OptionSpec, PriceEstimate, PricingSettings};
use roughvol_core::report::{render_report, ReportInput};
use roughvol_core::stat_tests::{sensitivity_analysis, significance_test, SensitivityReport};
use roughvol_core::synth::synth_chain;
use roughvol_core::Error;

use crate::config::{read_json, ChainInput, RunConfig};
use crate::output::{OutDir, Table};

fn load(chain: &ChainInput, rule: WeightRule) -> Result<OptionStructure> {
    Ok(load_chain_with_rule(&chain.csv, &chain.meta, rule)?)
}

fn csv_bytes(structure: &OptionStructure) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_chain_csv(structure, &mut buf).map_err(|source| Error::Csv { path: "<chain>".into(), source })?;
    Ok(buf)
}

pub fn synth(cfg: &RunConfig, out: &OutDir) -> Result<()> {
    let mut spec = cfg.synth.clone().context("config has no `synth` section")?;
    spec.seed = cfg.seed;
    let (structure, truth) = synth_chain(&spec)?;
    out.write_bytes("chain.csv", &csv_bytes(&structure)?)?;
    out.write_json("chain.meta.json", &market_meta(&structure))?;
    out.write_json("truth.json", &truth)?;
    Ok(())
}

#[derive(Serialize)]
struct PricedOption {
    strike: f64,
    maturity: f64,
    #[serde(flatten)]
    estimate: PriceEstimate,
}

#[derive(Serialize)]
struct PriceOutput<'a> {
    params: &'a ModelParams,
    env: MarketEnv,
    settings: PricingSettings,
    options: Vec<PricedOption>,
}

pub fn price(cfg: &RunConfig, out: &OutDir, dump_covariance: bool) -> Result<()> {
    let section = cfg.pricing.as_ref().context("config has no `pricing` section")?;
    let (options, env) = match (&section.options, &cfg.chain) {
        (Some(o), Some(c)) => (o.clone(), load(c, WeightRule::default())?.env),
        (None, Some(c)) => {
            let s = load(c, WeightRule::default())?;
            (s.specs(), s.env)
        }
        (_, None) => bail!("pricing needs a `chain` section for spot and rate"),
    };
    let settings = PricingSettings {
        path_count: section.path_count,
        steps_per_year: section.steps_per_year,
        seed: cfg.seed,
        estimator: section.estimator,
    };
    let pricer = ChainPricer::new(&options, env, settings)?;
    let estimates = pricer.price(&section.params)?;
    if dump_covariance {
        let dir = out.path("covariance");
        pricer.covariance(section.params.h)?.write_debug_csv(&dir)?;
    }
    let mut table = Table::new(["strike", "maturity", "price", "std_error"]);
    for (o, e) in options.iter().zip(&estimates) {
        table.row([o.strike.to_string(), o.maturity.to_string(), e.price.to_string(), e.std_error.to_string()]);
    }
    let priced = options
        .iter()
        .zip(estimates)
        .map(|(o, estimate): (&OptionSpec, _)| PricedOption { strike: o.strike, maturity: o.maturity, estimate })
        .collect();
    out.write_json("prices.json", &PriceOutput { params: &section.params, env, settings, options: priced })?;
    out.write_bytes("prices.csv", &table.into_bytes())?;
    Ok(())
}

fn summary_csv(day: &str, result: &CalibrationResult) -> Vec<u8> {
    let mut t = Table::new(SUMMARY_HEADER);
    t.row(summary_row(day, result));
    t.into_bytes()
}

pub fn calibrate_cmd(cfg: &RunConfig, out: &OutDir) -> Result<()> {
    let config = cfg.calibration();
    let structure = load(cfg.chain()?, config.weight_rule)?;
    let result = calibrate(&structure, &config)?;
    out.write_json("calibration.json", &result)?;
    out.write_bytes("calibration_row.csv", &summary_csv(&structure.trade_date.to_string(), &result))?;
    Ok(())
}

fn theta_csv(thetas: &[ModelParams]) -> Vec<u8> {
    let mut t = Table::new(std::iter::once("sample").chain(PARAM_NAMES));
    for (j, theta) in thetas.iter().enumerate() {
        t.row(std::iter::once(j.to_string()).chain(theta.to_array().iter().map(f64::to_string)));
    }
    t.into_bytes()
}

fn option_csv(structure: &OptionStructure, report: &BootstrapReport) -> Vec<u8> {
    let mut t = Table::new(["strike", "maturity", "market", "price_hat", "bre", "v"]);
    for (i, q) in structure.quotes.iter().enumerate() {
        t.row([
            q.strike.to_string(),
            q.maturity.to_string(),
            q.close.to_string(),
            report.price_hat[i].to_string(),
            report.bre[i].to_string(),
            report.v[i].to_string(),
        ]);
    }
    t.into_bytes()
}

pub fn bootstrap(cfg: &RunConfig, out: &OutDir) -> Result<()> {
    let section = cfg.bootstrap.as_ref().context("config has no `bootstrap` section")?;
    let config = cfg.calibration();
    let structure = load(cfg.chain()?, config.weight_rule)?;
    let overall = match (&section.overall_theta, &section.overall_calibration) {
        (Some(t), _) => *t,
        (None, Some(path)) => read_json::<CalibrationResult>(path)?.theta,
        (None, None) => {
            log::info!("no overall estimate configured; calibrating the full chain first");
            calibrate(&structure, &config)?.theta
        }
    };
    let plan = BootstrapPlan { sample_count: section.sample_count, base_seed: cfg.seed, calibration: config };
    let run = run_bootcalibrations(&structure, &overall, &plan)?;
    let report = bootstrap_statistics(&run, &structure)?;
    let mut scatter = Vec::new();
    export_scatter_matrix(&report.theta_samples, &report.theta_hat, &overall, &mut scatter)?;
    out.write_json("bootcalibrations.json", &run)?;
    out.write_json("bootstrap_report.json", &report)?;
    out.write_bytes("bootstrap_options.csv", &option_csv(&structure, &report))?;
    out.write_bytes("theta_samples.csv", &theta_csv(&report.theta_samples))?;
    out.write_bytes("scatter_matrix.csv", &scatter)?;
    Ok(())
}

pub fn sensitivity(cfg: &RunConfig, out: &OutDir) -> Result<()> {
    let section = cfg.sensitivity.as_ref().context("config has no `sensitivity` section")?;
    let report: BootstrapReport = read_json(&section.bootstrap_report)?;
    let result = sensitivity_analysis(&report.theta_samples, &report.arfv_per_sample, section.alpha_level)?;
    let mut t = Table::new(["parameter", "D", "p", "reject"]);
    for r in &result.rows {
        t.row([r.parameter.clone(), r.ks.statistic.to_string(), r.ks.p_value.to_string(), r.reject.to_string()]);
    }
    out.write_json("sensitivity.json", &result)?;
    out.write_bytes("sensitivity.csv", &t.into_bytes())?;
    Ok(())
}

pub fn significance(cfg: &RunConfig, out: &OutDir) -> Result<()> {
    let section = cfg.significance.as_ref().context("config has no `significance` section")?;
    let full: CalibrationResult = read_json(&section.full)?;
    let restricted: CalibrationResult = read_json(&section.restricted)?;
    let structure = load(cfg.chain()?, WeightRule::default())?;
    let settings = PricingSettings {
        path_count: section.path_count,
        steps_per_year: section.steps_per_year,
        seed: cfg.seed,
        estimator: section.estimator,
    };
    let result = significance_test(&structure, &full.theta, &restricted.theta, section.repetitions, settings)?;
    out.write_json("significance.json", &result)?;
    Ok(())
}

pub fn report(cfg: &RunConfig, out: &OutDir) -> Result<()> {
    let section = cfg.report.as_ref().context("config has no `report` section")?;
    let bootstrap: BootstrapReport = read_json(&section.bootstrap_report)?;
    let calibration: Option<CalibrationResult> = section.calibration.as_deref().map(read_json).transpose()?;
    let sensitivity: Option<SensitivityReport> = section.sensitivity.as_deref().map(read_json).transpose()?;
    let label = section.label.clone().unwrap_or_else(|| {
        section.bootstrap_report.file_stem().and_then(|s| s.to_str()).unwrap_or("run").to_string()
    });
    let text = render_report(&ReportInput {
        label: &label,
        calibration: calibration.as_ref(),
        bootstrap: &bootstrap,
        sensitivity: sensitivity.as_ref(),
    });
    out.write_text("report.md", &text)?;
    Ok(())
}

/// Machine-readable description of a failure.
#[derive(Serialize)]
pub struct ErrorReport {
    pub kind: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

pub fn describe(err: &anyhow::Error) -> ErrorReport {
    // core errors already print their source, so skip links that repeat it
    let mut parts: Vec<String> = Vec::new();
    for link in err.chain() {
        let text = link.to_string();
        if !parts.last().is_some_and(|p| p.ends_with(&text)) {
            parts.push(text);
        }
    }
    let message = parts.join(": ");
    let core = err.chain().find_map(|e| e.downcast_ref::<Error>());
    let (kind, path): (&'static str, Option<&Path>) = match core {
        Some(Error::Io { path, .. }) => ("io", Some(path)),
        Some(Error::Json { path, .. }) => ("json", Some(path)),
        Some(Error::Csv { path, .. }) => ("csv", Some(path)),
        Some(Error::InvalidRows { path, .. }) => ("invalid_rows", Some(path)),
        Some(Error::MalformedChain { path, .. }) => ("malformed_chain", Some(path)),
        Some(Error::Domain(_)) => ("domain", None),
        Some(Error::Insufficient(_)) => ("insufficient_data", None),
        Some(Error::Factorization { .. }) => ("factorization", None),
        Some(Error::Pricing { .. }) => ("pricing", None),
        Some(_) => ("numerical", None),
        None => ("config", None),
    };
    ErrorReport { kind, message, path: path.map(|p| p.display().to_string()) }
}

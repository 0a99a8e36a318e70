//! Weighted least-squares calibration of the αRFSV model to an option chain.
//!
//! The objective is evaluated on a path bundle frozen by the configured seed,
//! so `Θ ↦ G(Θ)` is deterministic. A genetic search over the bound box seeds
//! a bounded Levenberg–Marquardt refinement.

pub mod genetic;
pub mod local;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::market::{OptionStructure, WeightRule};
use crate::model::{ModelParams, PARAM_NAMES};
use crate::pricer::{ChainPricer, Estimator, PricingSettings, PRODUCTION_PATHS, PRODUCTION_STEPS_PER_YEAR};

pub use genetic::{genetic_minimize, GeneticConfig, GeneticOutcome};
pub use local::{levenberg_marquardt, LocalConfig, LocalOutcome, Termination};

/// Box constraints on `(σ₀, ρ, H, ξ, α)`. A component with `lower == upper`
/// is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamBounds {
    pub lower: ModelParams,
    pub upper: ModelParams,
}

impl Default for ParamBounds {
    fn default() -> Self {
        Self {
            lower: ModelParams { sigma0: 0.01, rho: -1.0, h: 0.05, xi: 0.01, alpha: 0.0 },
            upper: ModelParams { sigma0: 0.20, rho: -0.05, h: 0.25, xi: 3.0, alpha: 1.0 },
        }
    }
}

impl ParamBounds {
    pub fn validate(&self) -> Result<()> {
        self.lower.validate()?;
        self.upper.validate()?;
        let (lo, hi) = (self.lower.to_array(), self.upper.to_array());
        for j in 0..5 {
            if !(lo[j] <= hi[j]) {
                return domain(format!("bounds for {}: lower {} exceeds upper {}", PARAM_NAMES[j], lo[j], hi[j]));
            }
        }
        Ok(())
    }

    pub fn contains(&self, theta: &ModelParams) -> bool {
        let (lo, hi, x) = (self.lower.to_array(), self.upper.to_array(), theta.to_array());
        (0..5).all(|j| lo[j] <= x[j] && x[j] <= hi[j])
    }

    pub fn clamp(&self, x: [f64; 5]) -> [f64; 5] {
        let (lo, hi) = (self.lower.to_array(), self.upper.to_array());
        std::array::from_fn(|j| x[j].clamp(lo[j], hi[j]))
    }

    pub fn midpoint(&self) -> [f64; 5] {
        let (lo, hi) = (self.lower.to_array(), self.upper.to_array());
        std::array::from_fn(|j| 0.5 * (lo[j] + hi[j]))
    }

    /// Indices of components that are not fixed.
    pub fn free(&self) -> Vec<usize> {
        let (lo, hi) = (self.lower.to_array(), self.upper.to_array());
        (0..5).filter(|&j| hi[j] > lo[j]).collect()
    }

    fn fix(mut self, index: usize, value: f64) -> Self {
        let mut lo = self.lower.to_array();
        let mut hi = self.upper.to_array();
        lo[index] = value;
        hi[index] = value;
        self.lower = ModelParams::from_array(lo);
        self.upper = ModelParams::from_array(hi);
        self
    }
}

/// Model family to calibrate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelVariant {
    /// α = 0.
    Rfsv,
    /// α = 1.
    #[serde(rename = "rbergomi")]
    RBergomi,
    #[default]
    AlphaRfsv,
    /// H = 1/2, other components as configured.
    FixedH,
}

impl ModelVariant {
    /// Bounds with the variant's fixed components collapsed.
    pub fn apply(self, bounds: &ParamBounds) -> ParamBounds {
        match self {
            ModelVariant::Rfsv => bounds.fix(4, 0.0),
            ModelVariant::RBergomi => bounds.fix(4, 1.0),
            ModelVariant::AlphaRfsv => *bounds,
            ModelVariant::FixedH => bounds.fix(2, 0.5),
        }
    }
}

fn default_population() -> usize {
    150
}
fn default_generations() -> usize {
    5
}
fn default_obj_tol() -> f64 {
    1e-6
}
fn default_step_tol() -> f64 {
    1e-7
}
fn default_max_iterations() -> usize {
    100
}
fn default_paths() -> usize {
    PRODUCTION_PATHS
}
fn default_steps() -> u32 {
    PRODUCTION_STEPS_PER_YEAR
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    #[serde(default)]
    pub bounds: ParamBounds,
    #[serde(default = "default_population")]
    pub ga_population: usize,
    #[serde(default = "default_generations")]
    pub ga_generations: usize,
    #[serde(default = "default_obj_tol")]
    pub obj_tol: f64,
    #[serde(default = "default_step_tol")]
    pub step_tol: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_paths")]
    pub path_count: usize,
    #[serde(default = "default_steps")]
    pub steps_per_year: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub weight_rule: WeightRule,
    #[serde(default)]
    pub model_variant: ModelVariant,
    #[serde(default)]
    pub estimator: Estimator,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            bounds: ParamBounds::default(),
            ga_population: default_population(),
            ga_generations: default_generations(),
            obj_tol: default_obj_tol(),
            step_tol: default_step_tol(),
            max_iterations: default_max_iterations(),
            path_count: default_paths(),
            steps_per_year: default_steps(),
            seed: 0,
            weight_rule: WeightRule::default(),
            model_variant: ModelVariant::default(),
            estimator: Estimator::default(),
        }
    }
}

impl CalibrationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ga_population == 0 {
            return domain("ga_population must be at least 1");
        }
        if !(self.obj_tol > 0.0) || !(self.step_tol > 0.0) {
            return domain("tolerances must be positive");
        }
        if self.max_iterations == 0 {
            return domain("max_iterations must be at least 1");
        }
        self.pricing().validate()?;
        self.effective_bounds().validate()
    }

    /// Configured bounds with the variant's fixed components collapsed.
    pub fn effective_bounds(&self) -> ParamBounds {
        self.model_variant.apply(&self.bounds)
    }

    pub fn pricing(&self) -> PricingSettings {
        PricingSettings {
            path_count: self.path_count,
            steps_per_year: self.steps_per_year,
            seed: self.seed,
            estimator: self.estimator,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    fn local(&self) -> LocalConfig {
        LocalConfig { obj_tol: self.obj_tol, step_tol: self.step_tol, max_iterations: self.max_iterations, ..Default::default() }
    }
}

/// `Σ w_i (model_i − market_i)²`.
pub fn weighted_sse(model: &[f64], market: &[f64], weights: &[f64]) -> f64 {
    model.iter().zip(market).zip(weights).map(|((c, m), w)| w * (c - m).powi(2)).sum()
}

/// The frozen-noise objective over an option structure.
///
/// Every evaluation prices all options of the structure; `terms` lists which
/// of them enter the sum (repeats allowed), which is how bootstrap samples are
/// fitted without changing the simulation grid.
#[derive(Debug)]
pub struct Objective {
    structure: OptionStructure,
    pricer: ChainPricer,
    terms: Vec<usize>,
}

impl Objective {
    pub fn new(structure: &OptionStructure, settings: PricingSettings) -> Result<Self> {
        Self::on_terms(structure, (0..structure.len()).collect(), settings)
    }

    pub fn on_terms(structure: &OptionStructure, terms: Vec<usize>, settings: PricingSettings) -> Result<Self> {
        if terms.is_empty() {
            return domain("objective has no terms");
        }
        if let Some(&bad) = terms.iter().find(|&&i| i >= structure.len()) {
            return domain(format!("term index {bad} outside a structure of {} options", structure.len()));
        }
        let pricer = ChainPricer::new(&structure.specs(), structure.env, settings)?;
        Ok(Self { structure: structure.clone(), pricer, terms })
    }

    pub fn structure(&self) -> &OptionStructure {
        &self.structure
    }

    pub fn pricer(&self) -> &ChainPricer {
        &self.pricer
    }

    pub fn terms(&self) -> &[usize] {
        &self.terms
    }

    /// Model prices of every option in the structure.
    pub fn model_prices(&self, theta: &ModelParams) -> Result<Vec<f64>> {
        self.pricer.prices(theta)
    }

    /// `G` for a precomputed price vector.
    pub fn value_from_prices(&self, prices: &[f64]) -> f64 {
        let q = &self.structure.quotes;
        let w = &self.structure.weights;
        self.terms.iter().map(|&i| w[i] * (prices[i] - q[i].close).powi(2)).sum()
    }

    pub fn residuals_from_prices(&self, prices: &[f64]) -> Vec<f64> {
        let q = &self.structure.quotes;
        let w = &self.structure.weights;
        self.terms.iter().map(|&i| w[i].sqrt() * (prices[i] - q[i].close)).collect()
    }

    pub fn value(&self, theta: &ModelParams) -> Result<f64> {
        Ok(self.value_from_prices(&self.model_prices(theta)?))
    }

    pub fn residuals(&self, theta: &ModelParams) -> Result<Vec<f64>> {
        Ok(self.residuals_from_prices(&self.model_prices(theta)?))
    }
}

/// `G(Θ)` for a whole structure under `settings` (seed included).
pub fn objective(theta: &ModelParams, structure: &OptionStructure, settings: PricingSettings) -> Result<f64> {
    Objective::new(structure, settings)?.value(theta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitMetrics {
    pub aare: f64,
    pub mare: f64,
    pub arfv: f64,
    pub mrfv: f64,
}

pub fn fit_metrics(model_prices: &[f64], structure: &OptionStructure) -> Result<FitMetrics> {
    if structure.is_empty() {
        return Err(Error::Insufficient("fit metrics of an empty chain".into()));
    }
    if model_prices.len() != structure.len() {
        return domain(format!("{} model prices for {} options", model_prices.len(), structure.len()));
    }
    let n = structure.len() as f64;
    let spot = structure.env.spot;
    let (mut aare, mut mare, mut arfv, mut mrfv) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for (c, q) in model_prices.iter().zip(&structure.quotes) {
        let err = (c - q.close).abs();
        aare += err / q.close;
        mare = mare.max(err / q.close);
        arfv += err / spot;
        mrfv = mrfv.max(err / spot);
    }
    Ok(FitMetrics { aare: aare / n, mare, arfv: arfv / n, mrfv })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalDiagnostics {
    pub population: usize,
    pub generations: usize,
    pub evaluations: usize,
    pub best: ModelParams,
    pub best_objective: f64,
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalDiagnostics {
    pub start: ModelParams,
    pub start_objective: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub termination: Termination,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationDiagnostics {
    pub global: Option<GlobalDiagnostics>,
    pub local: LocalDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub theta: ModelParams,
    /// `G(Θ)`, the weighted residual sum of squares.
    pub objective: f64,
    pub metrics: FitMetrics,
    /// Model prices of every option of the structure at `theta`.
    pub model_prices: Vec<f64>,
    pub model_variant: ModelVariant,
    pub seed: u64,
    pub diagnostics: CalibrationDiagnostics,
}

fn genetic_stage(obj: &Objective, config: &CalibrationConfig) -> GlobalDiagnostics {
    let bounds = config.effective_bounds();
    let cfg = GeneticConfig::new(config.ga_population, config.ga_generations, config.seed);
    let out = genetic_minimize(
        |x: &[f64; 5]| obj.value(&ModelParams::from_array(*x)).unwrap_or(f64::INFINITY),
        &bounds,
        &cfg,
    );
    GlobalDiagnostics {
        population: cfg.population,
        generations: cfg.generations,
        evaluations: out.evaluations,
        best: ModelParams::from_array(out.best),
        best_objective: out.best_value,
        history: out.history,
    }
}

/// Genetic search over the bound box; returns the best individual.
pub fn global_search(structure: &OptionStructure, config: &CalibrationConfig) -> Result<ModelParams> {
    config.validate()?;
    let obj = Objective::new(&structure.with_weight_rule(config.weight_rule), config.pricing())?;
    Ok(genetic_stage(&obj, config).best)
}

/// Bounded refinement of an existing objective from `start`.
pub fn refine_objective(
    obj: &Objective,
    start: &ModelParams,
    config: &CalibrationConfig,
    global: Option<GlobalDiagnostics>,
) -> Result<CalibrationResult> {
    let bounds = config.effective_bounds();
    let start = ModelParams::from_array(bounds.clamp(start.to_array()));
    let out = levenberg_marquardt(
        |x: &[f64; 5]| obj.residuals(&ModelParams::from_array(*x)),
        start.to_array(),
        &bounds,
        &config.local(),
    )?;
    let theta = ModelParams::from_array(out.x);
    let model_prices = obj.model_prices(&theta)?;
    let objective = obj.value_from_prices(&model_prices);
    let metrics = fit_metrics(&model_prices, obj.structure())?;
    Ok(CalibrationResult {
        theta,
        objective,
        metrics,
        model_prices,
        model_variant: config.model_variant,
        seed: config.seed,
        diagnostics: CalibrationDiagnostics {
            global,
            local: LocalDiagnostics {
                start,
                start_objective: out.start_objective,
                iterations: out.iterations,
                evaluations: out.evaluations,
                termination: out.termination,
            },
        },
    })
}

/// Local stage only, started from `start`.
pub fn local_refine(start: &ModelParams, structure: &OptionStructure, config: &CalibrationConfig) -> Result<CalibrationResult> {
    config.validate()?;
    let obj = Objective::new(&structure.with_weight_rule(config.weight_rule), config.pricing())?;
    refine_objective(&obj, start, config, None)
}

/// Genetic search followed by local refinement.
pub fn calibrate(structure: &OptionStructure, config: &CalibrationConfig) -> Result<CalibrationResult> {
    config.validate()?;
    let obj = Objective::new(&structure.with_weight_rule(config.weight_rule), config.pricing())?;
    let global = genetic_stage(&obj, config);
    log::info!("genetic stage: G = {:.6e} after {} evaluations", global.best_objective, global.evaluations);
    let best = global.best;
    let result = refine_objective(&obj, &best, config, Some(global))?;
    log::info!(
        "local stage: G = {:.6e} after {} iterations ({:?})",
        result.objective,
        result.diagnostics.local.iterations,
        result.diagnostics.local.termination
    );
    Ok(result)
}

/// Column names of a summary row.
pub const SUMMARY_HEADER: [&str; 10] = ["day", "sigma0", "rho", "H", "xi", "alpha", "AARE", "MARE", "WRSS", "ARFV"];

/// `0.0646 → "6.46%"`.
pub fn format_percent(x: f64, decimals: usize) -> String {
    format!("{:.*}%", decimals, 100.0 * x)
}

/// One summary row: parameters to four decimals, relative errors as
/// percentages.
pub fn summary_row(day: &str, result: &CalibrationResult) -> [String; 10] {
    let t = &result.theta;
    [
        day.to_string(),
        format!("{:.4}", t.sigma0),
        format!("{:.4}", t.rho),
        format!("{:.4}", t.h),
        format!("{:.4}", t.xi),
        format!("{:.4}", t.alpha),
        format_percent(result.metrics.aare, 2),
        format_percent(result.metrics.mare, 2),
        format!("{:.4e}", result.objective),
        format_percent(result.metrics.arfv, 4),
    ]
}

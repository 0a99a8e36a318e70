//! Monte-Carlo pricing of European calls under αRFSV.
//!
//! Two estimators share the same joint `(B^H, W)` samples:
//!
//! * `Plain` simulates the log-price with the independent `W̃` increments and
//!   averages discounted payoffs.
//! * `ConditionalMixed` conditions on the `(B^H, W)` path. Given that path the
//!   `W̃` contribution is Gaussian, so the payoff expectation is a
//!   Black–Scholes value with spot `S₀ exp(ρ∫σdW − ½ρ²∫σ²dt)` and total
//!   variance `(1−ρ²)∫σ²dt`. Both integrals use left-endpoint volatility, the
//!   same discretization as the Euler scheme, so both estimators target the
//!   same discretized model.
//!
//! A whole chain is priced from one simulation on the union of the regular
//! grid and all quoted maturities; each option reads its paths truncated at
//! its own maturity.

use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::black_scholes::call_from_total_variance;
use crate::error::{domain, Error, Result};
use crate::fbm::{blocks, build_joint_covariance, JointCovariance, PathBundle, TimeGrid};
use crate::model::{euler_log_path, LogPricePaths, MarketEnv, ModelParams, VolPathSet, VolatilityMap};

/// Production path count.
pub const PRODUCTION_PATHS: usize = 150_000;
/// Production resolution: four steps per trading day.
pub const PRODUCTION_STEPS_PER_YEAR: u32 = 4 * 252;
/// Desk-scale path count used by tests and quick runs.
pub const DESK_PATHS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Plain,
    #[default]
    ConditionalMixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceEstimate {
    pub price: f64,
    pub std_error: f64,
    pub estimator: Estimator,
    pub path_count: usize,
}

/// Streaming mean/variance with an exact-zero variance for constant data.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Moments {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub(crate) fn from_slice(values: &[f64]) -> Self {
        let Some(&shift) = values.first() else {
            return Self::default();
        };
        let n = values.len();
        let mean_d = values.iter().map(|v| v - shift).sum::<f64>() / n as f64;
        let m2 = values.iter().map(|v| (v - shift - mean_d).powi(2)).sum();
        Self { n, mean: shift + mean_d, m2 }
    }

    pub(crate) fn merge(self, other: Self) -> Self {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let nf = n as f64;
        Self {
            n,
            mean: self.mean + delta * other.n as f64 / nf,
            m2: self.m2 + other.m2 + delta * delta * self.n as f64 * other.n as f64 / nf,
        }
    }

    fn estimate(self, estimator: Estimator) -> PriceEstimate {
        let std_error = if self.n > 1 { (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt() } else { 0.0 };
        PriceEstimate { price: self.mean, std_error, estimator, path_count: self.n }
    }
}

/// Per-path accumulation of `∫σdW` and `∫σ²dt` with left-endpoint volatility,
/// recorded at every grid node.
#[inline]
fn conditional_integrals(sigma0: f64, sigma: &[f64], w: &[f64], dt: &[f64], i1: &mut [f64], i2: &mut [f64]) {
    let (mut a, mut b) = (0.0, 0.0);
    let mut w_prev = 0.0;
    let mut s_left = sigma0;
    for k in 0..sigma.len() {
        a += s_left * (w[k] - w_prev);
        b += s_left * s_left * dt[k];
        i1[k] = a;
        i2[k] = b;
        w_prev = w[k];
        s_left = sigma[k];
    }
}

#[inline]
fn conditional_value(env: &MarketEnv, rho: f64, strike: f64, maturity: f64, i1: f64, i2: f64) -> f64 {
    let spot = env.spot * (rho * i1 - 0.5 * rho * rho * i2).exp();
    call_from_total_variance(spot, strike, env.rate, maturity, (1.0 - rho * rho) * i2)
}

fn check_option(strike: f64, maturity: f64, grid: &TimeGrid) -> Result<usize> {
    if !(strike >= 0.0) {
        return domain(format!("strike must be non-negative, got {strike}"));
    }
    grid.index_of(maturity).ok_or(Error::MaturityNotOnGrid(maturity))
}

/// `e^{−rT} mean[(S_T − K)^+]` over simulated log-prices.
pub fn price_call_plain(paths: &LogPricePaths, strike: f64, maturity: f64, env: &MarketEnv) -> Result<PriceEstimate> {
    let k = check_option(strike, maturity, paths.grid())?;
    let df = (-env.rate * maturity).exp();
    let values: Vec<f64> = paths.column(k).map(|x| df * (x.exp() - strike).max(0.0)).collect();
    Ok(Moments::from_slice(&values).estimate(Estimator::Plain))
}

/// Conditional (mixed) estimator on a materialized bundle.
pub fn price_call_conditional(
    vols: &VolPathSet,
    bundle: &PathBundle,
    strike: f64,
    maturity: f64,
    env: &MarketEnv,
    params: &ModelParams,
) -> Result<PriceEstimate> {
    if vols.grid() != bundle.grid() {
        return Err(Error::GridMismatch("volatility paths and bundle use different grids".into()));
    }
    let k = check_option(strike, maturity, bundle.grid())?;
    let dt = bundle.grid().increments();
    let n = dt.len();
    let (mut i1, mut i2) = (vec![0.0; n], vec![0.0; n]);
    let values: Vec<f64> = (0..bundle.path_count())
        .map(|p| {
            conditional_integrals(params.sigma0, vols.path(p), bundle.w_path(p), &dt, &mut i1, &mut i2);
            conditional_value(env, params.rho, strike, maturity, i1[k], i2[k])
        })
        .collect();
    Ok(Moments::from_slice(&values).estimate(Estimator::ConditionalMixed))
}

/// A European call by strike and maturity (years).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionSpec {
    pub strike: f64,
    pub maturity: f64,
}

/// Simulation settings shared by pricing, calibration and bootstrap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PricingSettings {
    pub path_count: usize,
    pub steps_per_year: u32,
    pub seed: u64,
    #[serde(default)]
    pub estimator: Estimator,
}

impl PricingSettings {
    pub fn validate(&self) -> Result<()> {
        if self.path_count == 0 {
            return domain("path_count must be at least 1");
        }
        if self.steps_per_year == 0 {
            return domain("steps_per_year must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainPricingRequest {
    pub options: Vec<OptionSpec>,
    pub env: MarketEnv,
    pub params: ModelParams,
    pub path_count: usize,
    pub steps_per_year: u32,
    pub seed: u64,
    #[serde(default)]
    pub estimator: Estimator,
}

const COV_CACHE: usize = 8;

/// Reusable chain pricer. Holds the union grid and a small cache of
/// factorized covariances keyed by `H`, so repeated evaluations at the same
/// Hurst index (finite differences in the other parameters) skip the
/// factorization.
#[derive(Debug)]
pub struct ChainPricer {
    grid: TimeGrid,
    env: MarketEnv,
    options: Vec<OptionSpec>,
    /// grid index of each option's maturity
    nodes: Vec<usize>,
    settings: PricingSettings,
    cache: Mutex<Vec<(u64, Arc<JointCovariance>)>>,
}

impl ChainPricer {
    pub fn new(options: &[OptionSpec], env: MarketEnv, settings: PricingSettings) -> Result<Self> {
        settings.validate()?;
        if options.is_empty() {
            return domain("option list is empty");
        }
        let maturities: Vec<f64> = options.iter().map(|o| o.maturity).collect();
        let grid = TimeGrid::with_maturities(settings.steps_per_year, &maturities)?;
        let nodes = options
            .iter()
            .map(|o| check_option(o.strike, o.maturity, &grid))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { grid, env, options: options.to_vec(), nodes, settings, cache: Mutex::new(Vec::new()) })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn options(&self) -> &[OptionSpec] {
        &self.options
    }

    pub fn settings(&self) -> &PricingSettings {
        &self.settings
    }

    pub fn env(&self) -> &MarketEnv {
        &self.env
    }

    /// Factorized covariance for Hurst index `h`, cached.
    pub fn covariance(&self, h: f64) -> Result<Arc<JointCovariance>> {
        let key = h.to_bits();
        if let Some((_, cov)) = self.cache.lock().unwrap().iter().find(|(k, _)| *k == key) {
            return Ok(Arc::clone(cov));
        }
        let cov = Arc::new(build_joint_covariance(&self.grid, h)?);
        let mut cache = self.cache.lock().unwrap();
        if !cache.iter().any(|(k, _)| *k == key) {
            if cache.len() >= COV_CACHE {
                cache.remove(0);
            }
            cache.push((key, Arc::clone(&cov)));
        }
        Ok(cov)
    }

    /// Prices every option with the configured seed.
    pub fn price(&self, params: &ModelParams) -> Result<Vec<PriceEstimate>> {
        self.price_seeded(params, self.settings.seed)
    }

    /// Prices every option from one simulation drawn with `seed`.
    pub fn price_seeded(&self, params: &ModelParams, seed: u64) -> Result<Vec<PriceEstimate>> {
        params.validate()?;
        let cov = self.covariance(params.h)?;
        let estimator = self.settings.estimator;
        let block_list: Vec<_> = blocks(self.settings.path_count).collect();
        let per_block: Vec<Vec<Moments>> = block_list
            .into_par_iter()
            .map(|(b, len)| self.price_block(&cov, params, seed, b, len))
            .collect();
        let mut acc = vec![Moments::default(); self.options.len()];
        for block in per_block {
            for (a, m) in acc.iter_mut().zip(block) {
                *a = a.merge(m);
            }
        }
        Ok(acc.into_iter().map(|m| m.estimate(estimator)).collect())
    }

    /// Price vector only.
    pub fn prices(&self, params: &ModelParams) -> Result<Vec<f64>> {
        Ok(self.price(params)?.into_iter().map(|e| e.price).collect())
    }

    fn price_block(&self, cov: &JointCovariance, params: &ModelParams, seed: u64, b: usize, len: usize) -> Vec<Moments> {
        let plain = self.settings.estimator == Estimator::Plain;
        let block = cov.sample_block(seed, b, len, plain);
        let n = self.grid.len();
        let dt = self.grid.increments();
        let map = VolatilityMap::new(params, &self.grid);
        let x0 = self.env.spot.ln();
        let discounts: Vec<f64> = self.options.iter().map(|o| (-self.env.rate * o.maturity).exp()).collect();

        let mut sigma = vec![0.0; n];
        let mut a = vec![0.0; n];
        let mut c = vec![0.0; n];
        let mut values = vec![0.0; len * self.options.len()];
        for p in 0..len {
            map.fill(block.fbm_row(p), &mut sigma);
            let row = &mut values[p * self.options.len()..(p + 1) * self.options.len()];
            if plain {
                let w_tilde = block.w_tilde_row(p).expect("plain estimator draws W̃");
                euler_log_path(
                    x0,
                    self.env.rate,
                    params.rho,
                    params.sigma0,
                    &sigma,
                    block.w_row(p),
                    w_tilde,
                    &dt,
                    &mut a,
                );
                for (i, (opt, &k)) in self.options.iter().zip(&self.nodes).enumerate() {
                    row[i] = discounts[i] * (a[k].exp() - opt.strike).max(0.0);
                }
            } else {
                conditional_integrals(params.sigma0, &sigma, block.w_row(p), &dt, &mut a, &mut c);
                for (i, (opt, &k)) in self.options.iter().zip(&self.nodes).enumerate() {
                    row[i] = conditional_value(&self.env, params.rho, opt.strike, opt.maturity, a[k], c[k]);
                }
            }
        }
        let m = self.options.len();
        (0..m)
            .map(|i| {
                let col: Vec<f64> = values.iter().skip(i).step_by(m).copied().collect();
                Moments::from_slice(&col)
            })
            .collect()
    }
}

/// Prices a whole chain from a single simulated path set.
pub fn price_chain(request: &ChainPricingRequest) -> Result<Vec<PriceEstimate>> {
    let settings = PricingSettings {
        path_count: request.path_count,
        steps_per_year: request.steps_per_year,
        seed: request.seed,
        estimator: request.estimator,
    };
    let pricer = ChainPricer::new(&request.options, request.env, settings)?;
    pricer.price(&request.params).map_err(|e| Error::Pricing { index: 0, source: Box::new(e) })
}

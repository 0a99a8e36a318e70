//! Synthetic option chains priced by the model itself.

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::market::{DayCount, OptionQuote, OptionStructure, WeightRule};
use crate::model::{MarketEnv, ModelParams};
use crate::pricer::{ChainPricer, Estimator, OptionSpec, PricingSettings, PRODUCTION_PATHS, PRODUCTION_STEPS_PER_YEAR};

fn default_trade_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2015, 4, 1).expect("valid date")
}
fn default_moneyness() -> Vec<f64> {
    vec![0.90, 0.95, 1.00, 1.05, 1.10]
}
fn default_days() -> Vec<u32> {
    vec![30, 60, 91, 182]
}
fn default_paths() -> usize {
    PRODUCTION_PATHS
}
fn default_steps() -> u32 {
    PRODUCTION_STEPS_PER_YEAR
}
fn default_spot() -> f64 {
    100.0
}
fn default_spread_abs() -> f64 {
    0.02
}
fn default_spread_rel() -> f64 {
    0.02
}

/// Recipe for a synthetic chain on a strike × expiry lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub theta: ModelParams,
    #[serde(default = "default_spot")]
    pub spot: f64,
    #[serde(default)]
    pub rate: f64,
    #[serde(default = "default_trade_date")]
    pub trade_date: NaiveDate,
    #[serde(default)]
    pub day_count: DayCount,
    /// Strikes as multiples of spot.
    #[serde(default = "default_moneyness")]
    pub moneyness: Vec<f64>,
    /// Calendar days from the trade date to each expiry.
    #[serde(default = "default_days")]
    pub maturity_days: Vec<u32>,
    #[serde(default = "default_paths")]
    pub path_count: usize,
    #[serde(default = "default_steps")]
    pub steps_per_year: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub estimator: Estimator,
    /// Quoted spread is `spread_abs + spread_rel · price`.
    #[serde(default = "default_spread_abs")]
    pub spread_abs: f64,
    #[serde(default = "default_spread_rel")]
    pub spread_rel: f64,
}

impl SynthSpec {
    pub fn new(theta: ModelParams) -> Self {
        Self {
            theta,
            spot: default_spot(),
            rate: 0.0,
            trade_date: default_trade_date(),
            day_count: DayCount::default(),
            moneyness: default_moneyness(),
            maturity_days: default_days(),
            path_count: default_paths(),
            steps_per_year: default_steps(),
            seed: 0,
            estimator: Estimator::default(),
            spread_abs: default_spread_abs(),
            spread_rel: default_spread_rel(),
        }
    }

    pub fn pricing(&self) -> PricingSettings {
        PricingSettings {
            path_count: self.path_count,
            steps_per_year: self.steps_per_year,
            seed: self.seed,
            estimator: self.estimator,
        }
    }
}

/// What generated a synthetic chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthTruth {
    pub theta: ModelParams,
    pub spot: f64,
    pub rate: f64,
    pub path_count: usize,
    pub steps_per_year: u32,
    pub seed: u64,
    pub std_errors: Vec<f64>,
}

/// Prices the lattice at `spec.theta` and quotes it with the configured
/// spreads. Options are ordered by expiry, then strike.
pub fn synth_chain(spec: &SynthSpec) -> Result<(OptionStructure, SynthTruth)> {
    spec.theta.validate()?;
    if spec.moneyness.is_empty() || spec.maturity_days.is_empty() {
        return domain("synthetic lattice is empty");
    }
    if !(spec.spread_abs >= 0.0 && spec.spread_rel >= 0.0) {
        return domain("spreads must be non-negative");
    }
    let env = MarketEnv::new(spec.spot, spec.rate)?;
    let mut expiries = Vec::new();
    for &d in &spec.maturity_days {
        if d == 0 {
            return domain("maturity of 0 days");
        }
        let date = spec
            .trade_date
            .checked_add_days(Days::new(d.into()))
            .ok_or_else(|| Error::Domain(format!("expiry {d} days after {} overflows", spec.trade_date)))?;
        expiries.push((date, spec.day_count.year_fraction(spec.trade_date, date)));
    }
    let mut specs = Vec::new();
    let mut dates = Vec::new();
    for &(date, t) in &expiries {
        for &m in &spec.moneyness {
            // listed strikes sit on a tick grid
            let strike = (m * spec.spot * 1e4).round() / 1e4;
            specs.push(OptionSpec { strike, maturity: t });
            dates.push(date);
        }
    }
    let estimates = ChainPricer::new(&specs, env, spec.pricing())?.price(&spec.theta)?;
    let mut quotes = Vec::with_capacity(specs.len());
    for (i, ((o, date), e)) in specs.iter().zip(&dates).zip(&estimates).enumerate() {
        if !(e.price > 0.0) {
            return Err(Error::Pricing {
                index: i,
                source: Box::new(Error::Domain(format!("synthetic price {} is not positive", e.price))),
            });
        }
        let half = 0.5 * (spec.spread_abs + spec.spread_rel * e.price);
        quotes.push(OptionQuote {
            strike: o.strike,
            maturity: o.maturity,
            expiry_date: *date,
            bid: (e.price - half).max(0.0),
            ask: e.price + half,
            close: e.price,
            volume: None,
        });
    }
    let structure = OptionStructure::new(quotes, env, spec.trade_date, spec.day_count, WeightRule::default())?;
    let truth = SynthTruth {
        theta: spec.theta,
        spot: spec.spot,
        rate: spec.rate,
        path_count: spec.path_count,
        steps_per_year: spec.steps_per_year,
        seed: spec.seed,
        std_errors: estimates.iter().map(|e| e.std_error).collect(),
    };
    Ok((structure, truth))
}

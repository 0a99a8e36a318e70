#![allow(dead_code)]

use chrono::NaiveDate;
use roughvol_core::calibrate::CalibrationConfig;
use roughvol_core::market::{DayCount, OptionQuote, OptionStructure, WeightRule};
use roughvol_core::model::{MarketEnv, ModelParams};

pub fn trade_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2015, 4, 1).unwrap()
}

/// Chain with one quote per `(strike, maturity, close)` and a 0.2 spread.
pub fn chain(rows: &[(f64, f64, f64)]) -> OptionStructure {
    let quotes = rows
        .iter()
        .map(|&(strike, maturity, close)| OptionQuote {
            strike,
            maturity,
            expiry_date: trade_date() + chrono::Duration::days((maturity * 365.0).round() as i64),
            bid: close - 0.1,
            ask: close + 0.1,
            close,
            volume: None,
        })
        .collect();
    OptionStructure::new(quotes, MarketEnv::new(100.0, 0.0).unwrap(), trade_date(), DayCount::Act365, WeightRule::InvSpreadSq)
        .unwrap()
}

pub fn five_option_chain() -> OptionStructure {
    chain(&[(90.0, 0.25, 11.2), (95.0, 0.25, 7.1), (100.0, 0.25, 4.0), (105.0, 0.5, 3.3), (110.0, 0.5, 1.9)])
}

pub fn theta() -> ModelParams {
    ModelParams::new(0.08, -0.4, 0.15, 1.0, 0.6).unwrap()
}

/// Calibration small enough for the test suite.
pub fn quick_config(seed: u64) -> CalibrationConfig {
    CalibrationConfig {
        ga_population: 10,
        ga_generations: 2,
        max_iterations: 15,
        path_count: 2000,
        steps_per_year: 12,
        seed,
        ..CalibrationConfig::default()
    }
}

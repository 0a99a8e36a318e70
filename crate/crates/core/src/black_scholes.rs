//! Closed-form Black–Scholes call, used as the conditional-pricing kernel and
//! as a test oracle.

use statrs::function::erf::erfc;

use crate::error::{domain, Result};

#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Call value from total variance `σ²T`; degenerates to the discounted
/// intrinsic value when the variance is zero.
#[inline]
pub fn call_from_total_variance(spot: f64, strike: f64, rate: f64, maturity: f64, total_var: f64) -> f64 {
    let discounted_strike = strike * (-rate * maturity).exp();
    if strike <= 0.0 {
        return spot;
    }
    if !(total_var > 0.0) {
        return (spot - discounted_strike).max(0.0);
    }
    let sd = total_var.sqrt();
    let d1 = (spot / discounted_strike).ln() / sd + 0.5 * sd;
    let d2 = d1 - sd;
    (spot * norm_cdf(d1) - discounted_strike * norm_cdf(d2)).max(0.0)
}

/// European call under Black–Scholes.
pub fn black_scholes_call(spot: f64, strike: f64, rate: f64, vol: f64, maturity: f64) -> Result<f64> {
    if !(spot > 0.0) {
        return domain(format!("spot must be positive, got {spot}"));
    }
    if !(strike > 0.0) {
        return domain(format!("strike must be positive, got {strike}"));
    }
    if !(vol >= 0.0) || !(maturity >= 0.0) {
        return domain("volatility and maturity must be non-negative");
    }
    Ok(call_from_total_variance(spot, strike, rate, maturity, vol * vol * maturity))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atm_reference() {
        // 30-digit normal-CDF evaluation: 7.96556745540579629
        let v = black_scholes_call(100.0, 100.0, 0.0, 0.2, 1.0).unwrap();
        assert!((v - 7.965_567_455_405_796).abs() < 1e-12, "{v}");
    }

    #[test]
    fn with_rate_reference() {
        // 30-digit evaluation: 10.8714688501617213
        let v = black_scholes_call(105.0, 100.0, 0.03, 0.25, 0.5).unwrap();
        assert!((v - 10.871_468_850_161_72).abs() < 1e-11, "{v}");
    }

    #[test]
    fn degenerate_limits() {
        assert_eq!(black_scholes_call(110.0, 100.0, 0.0, 0.0, 1.0).unwrap(), 10.0);
        assert_eq!(black_scholes_call(110.0, 100.0, 0.0, 0.3, 0.0).unwrap(), 10.0);
        assert!((black_scholes_call(100.0, 1e-12, 0.0, 0.2, 1.0).unwrap() - 100.0).abs() < 1e-9);
        assert!((black_scholes_call(90.0, 100.0, 0.05, 0.0, 1.0).unwrap() - 0.0).abs() < 1e-12);
    }

    #[test]
    fn domain_errors() {
        assert!(black_scholes_call(0.0, 100.0, 0.0, 0.2, 1.0).is_err());
        assert!(black_scholes_call(100.0, -1.0, 0.0, 0.2, 1.0).is_err());
        assert!(black_scholes_call(100.0, 100.0, 0.0, -0.2, 1.0).is_err());
    }

    #[test]
    fn put_call_parity_bounds() {
        for &k in &[50.0, 90.0, 100.0, 120.0, 300.0] {
            let c = black_scholes_call(100.0, k, 0.02, 0.3, 2.0).unwrap();
            let lower = (100.0 - k * (-0.04f64).exp()).max(0.0);
            assert!(c >= lower - 1e-12 && c <= 100.0);
        }
    }
}

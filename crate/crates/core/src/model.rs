//! The αRFSV volatility model.
//!
//! `σ_t = σ₀ exp(ξ B^H_t − ½ α ξ² t^{2H})`: α = 0 is RFSV, α = 1 is rough
//! Bergomi. The log-price follows
//! `dX = (r − ½σ²)dt + σ(ρ dW + √(1−ρ²) dW̃)`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::fbm::{PathBundle, TimeGrid};

/// Parameter vector `(σ₀, ρ, H, ξ, α)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub sigma0: f64,
    pub rho: f64,
    #[serde(rename = "hurst")]
    pub h: f64,
    pub xi: f64,
    pub alpha: f64,
}

/// Parameter names in vector order.
pub const PARAM_NAMES: [&str; 5] = ["sigma0", "rho", "hurst", "xi", "alpha"];

impl ModelParams {
    pub fn new(sigma0: f64, rho: f64, h: f64, xi: f64, alpha: f64) -> Result<Self> {
        let p = Self { sigma0, rho, h, xi, alpha };
        p.validate()?;
        Ok(p)
    }

    /// Checks the model's natural domain (not calibration bounds).
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma0 > 0.0) || !self.sigma0.is_finite() {
            return domain(format!("sigma0 must be positive, got {}", self.sigma0));
        }
        if !(-1.0..=1.0).contains(&self.rho) {
            return domain(format!("rho must lie in [-1, 1], got {}", self.rho));
        }
        if !(self.h > 0.0 && self.h < 1.0) {
            return domain(format!("hurst must lie in (0, 1), got {}", self.h));
        }
        // ξ = 0 is admitted as the constant-volatility limit
        if !(self.xi >= 0.0) || !self.xi.is_finite() {
            return domain(format!("xi must be non-negative, got {}", self.xi));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return domain(format!("alpha must lie in [0, 1], got {}", self.alpha));
        }
        Ok(())
    }

    pub fn to_array(&self) -> [f64; 5] {
        [self.sigma0, self.rho, self.h, self.xi, self.alpha]
    }

    pub fn from_array(v: [f64; 5]) -> Self {
        Self { sigma0: v[0], rho: v[1], h: v[2], xi: v[3], alpha: v[4] }
    }
}

/// Spot and continuously-compounded rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketEnv {
    pub spot: f64,
    pub rate: f64,
}

impl MarketEnv {
    pub fn new(spot: f64, rate: f64) -> Result<Self> {
        if !(spot > 0.0) || !spot.is_finite() {
            return domain(format!("spot must be positive, got {spot}"));
        }
        if !(rate >= 0.0) || !rate.is_finite() {
            return domain(format!("rate must be non-negative, got {rate}"));
        }
        Ok(Self { spot, rate })
    }
}

/// Per-grid-node constants of the volatility map.
#[derive(Debug, Clone)]
pub struct VolatilityMap {
    sigma0: f64,
    xi: f64,
    /// `−½ α ξ² t_k^{2H}`
    drift: Vec<f64>,
}

impl VolatilityMap {
    pub fn new(params: &ModelParams, grid: &TimeGrid) -> Self {
        let drift = grid
            .times()
            .iter()
            .map(|t| -0.5 * params.alpha * params.xi * params.xi * t.powf(2.0 * params.h))
            .collect();
        Self { sigma0: params.sigma0, xi: params.xi, drift }
    }

    /// Writes `σ` at every grid node for one `B^H` path.
    #[inline]
    pub fn fill(&self, fbm: &[f64], out: &mut [f64]) {
        for ((o, b), d) in out.iter_mut().zip(fbm).zip(&self.drift) {
            *o = self.sigma0 * (self.xi * b + d).exp();
        }
    }
}

/// Volatility paths `σ_{t_k}`, row-major `P × n`.
#[derive(Debug, Clone)]
pub struct VolPathSet {
    params: ModelParams,
    grid: TimeGrid,
    sigma: Vec<f64>,
}

impl VolPathSet {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn path_count(&self) -> usize {
        self.sigma.len() / self.grid.len()
    }

    pub fn path(&self, p: usize) -> &[f64] {
        let n = self.grid.len();
        &self.sigma[p * n..(p + 1) * n]
    }
}

fn check_bundle(bundle: &PathBundle, params: &ModelParams, grid: &TimeGrid) -> Result<()> {
    if bundle.grid() != grid {
        return Err(Error::GridMismatch("path bundle was sampled on a different grid".into()));
    }
    if bundle.hurst() != params.h {
        return Err(Error::GridMismatch(format!(
            "path bundle sampled with H = {}, parameters use H = {}",
            bundle.hurst(),
            params.h
        )));
    }
    Ok(())
}

/// Applies the αRFSV volatility map to every sampled fBm path.
pub fn volatility_paths(bundle: &PathBundle, params: &ModelParams, grid: &TimeGrid) -> Result<VolPathSet> {
    params.validate()?;
    check_bundle(bundle, params, grid)?;
    let n = grid.len();
    let map = VolatilityMap::new(params, grid);
    let mut sigma = vec![0.0; n * bundle.path_count()];
    for (p, out) in sigma.chunks_exact_mut(n).enumerate() {
        map.fill(bundle.fbm_path(p), out);
    }
    Ok(VolPathSet { params: *params, grid: grid.clone(), sigma })
}

/// Log-price paths `X_{t_k}`, row-major `P × n`; `X_0 = ln S₀` is implicit.
#[derive(Debug, Clone)]
pub struct LogPricePaths {
    grid: TimeGrid,
    env: MarketEnv,
    x: Vec<f64>,
}

impl LogPricePaths {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn env(&self) -> &MarketEnv {
        &self.env
    }

    pub fn path_count(&self) -> usize {
        self.x.len() / self.grid.len()
    }

    pub fn path(&self, p: usize) -> &[f64] {
        let n = self.grid.len();
        &self.x[p * n..(p + 1) * n]
    }

    /// `X_T` across all paths for grid index `k`.
    pub fn column(&self, k: usize) -> impl Iterator<Item = f64> + '_ {
        let n = self.grid.len();
        self.x.iter().skip(k).step_by(n).copied()
    }
}

/// One Euler step sequence of the log-price, left-endpoint volatility.
///
/// `sigma[k]` is the volatility at `t_k`; step `k` runs from `t_{k−1}` (or 0)
/// to `t_k` using the volatility at its left end, which is `σ₀` for the first step.
#[inline]
pub(crate) fn euler_log_path(
    x0: f64,
    rate: f64,
    rho: f64,
    sigma0: f64,
    sigma: &[f64],
    w: &[f64],
    w_tilde_inc: &[f64],
    dt: &[f64],
    out: &mut [f64],
) {
    let ortho = (1.0 - rho * rho).max(0.0).sqrt();
    let mut x = x0;
    let mut w_prev = 0.0;
    let mut s_left = sigma0;
    for k in 0..out.len() {
        let dw = w[k] - w_prev;
        x += (rate - 0.5 * s_left * s_left) * dt[k] + s_left * (rho * dw + ortho * w_tilde_inc[k]);
        out[k] = x;
        w_prev = w[k];
        s_left = sigma[k];
    }
}

/// Simulates log-prices by the Euler scheme on the log-model.
pub fn log_price_paths(
    bundle: &PathBundle,
    vols: &VolPathSet,
    env: &MarketEnv,
    params: &ModelParams,
) -> Result<LogPricePaths> {
    if bundle.grid() != vols.grid() {
        return Err(Error::GridMismatch("volatility paths and bundle use different grids".into()));
    }
    if vols.path_count() != bundle.path_count() {
        return Err(Error::GridMismatch("volatility and bundle path counts differ".into()));
    }
    params.validate()?;
    let grid = bundle.grid();
    let n = grid.len();
    let dt = grid.increments();
    let x0 = env.spot.ln();
    let mut x = vec![0.0; n * bundle.path_count()];
    for (p, out) in x.chunks_exact_mut(n).enumerate() {
        euler_log_path(
            x0,
            env.rate,
            params.rho,
            params.sigma0,
            vols.path(p),
            bundle.w_path(p),
            bundle.w_tilde_increments(p),
            &dt,
            out,
        );
    }
    Ok(LogPricePaths { grid: grid.clone(), env: *env, x })
}

//! Bound-constrained Levenberg–Marquardt with forward-difference Jacobians.
//!
//! Works in coordinates normalized to the bound box, so the finite-difference
//! step and the step tolerance are fractions of each bound width. Trial points
//! are projected onto the box; a rejected trial raises the damping, which
//! shrinks the step back toward the current interior point.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::ParamBounds;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalConfig {
    /// Stop when an accepted step improves the objective by less than this
    /// fraction of its value.
    pub obj_tol: f64,
    /// Stop when the normalized step is shorter than this.
    pub step_tol: f64,
    pub max_iterations: usize,
    /// Finite-difference step as a fraction of the bound width.
    pub fd_step: f64,
}

impl Default for LocalConfig {
    fn default() -> Self {
        Self { obj_tol: 1e-6, step_tol: 1e-7, max_iterations: 100, fd_step: 1e-4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ObjectiveTolerance,
    StepTolerance,
    MaxIterations,
    NoProgress,
    ZeroResidual,
    NoFreeParameters,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalOutcome {
    pub x: [f64; 5],
    pub objective: f64,
    pub start_objective: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub termination: Termination,
}

const LAMBDA_START: f64 = 1e-3;
const LAMBDA_MAX: f64 = 1e12;

struct Box5 {
    lower: [f64; 5],
    width: [f64; 5],
    free: Vec<usize>,
}

impl Box5 {
    fn new(bounds: &ParamBounds) -> Self {
        let lower = bounds.lower.to_array();
        let upper = bounds.upper.to_array();
        let mut width = [0.0; 5];
        for j in 0..5 {
            width[j] = upper[j] - lower[j];
        }
        let free = (0..5).filter(|&j| width[j] > 0.0).collect();
        Self { lower, width, free }
    }

    fn to_point(&self, base: &[f64; 5], y: &[f64]) -> [f64; 5] {
        let mut x = *base;
        for (k, &j) in self.free.iter().enumerate() {
            x[j] = self.lower[j] + self.width[j] * y[k].clamp(0.0, 1.0);
        }
        x
    }

    fn to_unit(&self, x: &[f64; 5]) -> Vec<f64> {
        self.free.iter().map(|&j| ((x[j] - self.lower[j]) / self.width[j]).clamp(0.0, 1.0)).collect()
    }
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Minimizes `‖r(x)‖²` from `start` inside `bounds`.
pub fn levenberg_marquardt<F>(residuals: F, start: [f64; 5], bounds: &ParamBounds, cfg: &LocalConfig) -> Result<LocalOutcome>
where
    F: Fn(&[f64; 5]) -> Result<Vec<f64>> + Sync,
{
    let bx = Box5::new(bounds);
    let start = bounds.clamp(start);
    let mut r = residuals(&start)?;
    let mut g = sum_sq(&r);
    if !g.is_finite() {
        return Err(Error::NonFinite(format!("objective at start is {g}")));
    }
    let start_objective = g;
    let mut evaluations = 1;
    let done = |x, g, iterations, evaluations, termination| {
        Ok(LocalOutcome { x, objective: g, start_objective, iterations, evaluations, termination })
    };
    if bx.free.is_empty() {
        return done(start, g, 0, evaluations, Termination::NoFreeParameters);
    }
    if g == 0.0 {
        return done(start, g, 0, evaluations, Termination::ZeroResidual);
    }

    let d = bx.free.len();
    let m = r.len();
    let mut x = start;
    let mut y = bx.to_unit(&x);
    let mut lambda = LAMBDA_START;

    for iteration in 1..=cfg.max_iterations {
        // forward differences, stepping backward at the upper bound
        let columns: Vec<Result<(Vec<f64>, f64)>> = (0..d)
            .into_par_iter()
            .map(|k| {
                let mut yk = y.clone();
                let h = if y[k] + cfg.fd_step <= 1.0 { cfg.fd_step } else { -cfg.fd_step };
                yk[k] += h;
                let rk = residuals(&bx.to_point(&x, &yk))?;
                Ok((rk, h))
            })
            .collect();
        evaluations += d;
        let mut jac = DMatrix::zeros(m, d);
        for (k, col) in columns.into_iter().enumerate() {
            let (rk, h) = col?;
            for i in 0..m {
                jac[(i, k)] = (rk[i] - r[i]) / h;
            }
        }
        let rv = DVector::from_column_slice(&r);
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * rv;

        loop {
            let mut a = jtj.clone();
            for k in 0..d {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-12);
            }
            let step = match a.cholesky() {
                Some(ch) => ch.solve(&(-&grad)),
                None => {
                    lambda *= 10.0;
                    if lambda > LAMBDA_MAX {
                        return done(x, g, iteration, evaluations, Termination::NoProgress);
                    }
                    continue;
                }
            };
            let y_trial: Vec<f64> = y.iter().zip(step.iter()).map(|(a, s)| (a + s).clamp(0.0, 1.0)).collect();
            let step_norm = y_trial.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            if step_norm < cfg.step_tol {
                return done(x, g, iteration, evaluations, Termination::StepTolerance);
            }
            let x_trial = bx.to_point(&x, &y_trial);
            let r_trial = residuals(&x_trial)?;
            evaluations += 1;
            let g_trial = sum_sq(&r_trial);
            if g_trial.is_finite() && g_trial < g {
                let improvement = g - g_trial;
                x = x_trial;
                y = y_trial;
                r = r_trial;
                g = g_trial;
                lambda = (lambda / 10.0).max(1e-12);
                if g == 0.0 {
                    return done(x, g, iteration, evaluations, Termination::ZeroResidual);
                }
                if improvement <= cfg.obj_tol * (g + improvement) {
                    return done(x, g, iteration, evaluations, Termination::ObjectiveTolerance);
                }
                break;
            }
            lambda *= 10.0;
            if lambda > LAMBDA_MAX {
                return done(x, g, iteration, evaluations, Termination::NoProgress);
            }
        }
    }
    done(x, g, cfg.max_iterations, evaluations, Termination::MaxIterations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibrate::ModelVariant;

    fn linear_residuals(target: [f64; 5], scale: f64) -> impl Fn(&[f64; 5]) -> Result<Vec<f64>> + Sync {
        move |x: &[f64; 5]| {
            let s = scale.sqrt();
            Ok(vec![
                s * 10.0 * (x[0] - target[0]),
                s * (x[1] - target[1]),
                s * 5.0 * (x[2] - target[2]) + s * 0.5 * (x[0] - target[0]),
                s * (x[3] - target[3]),
                s * 2.0 * (x[4] - target[4]),
                s * (x[3] - target[3]) * (x[1] - target[1]),
            ])
        }
    }

    const TARGET: [f64; 5] = [0.07, -0.3, 0.12, 1.1, 0.4];

    #[test]
    fn converges_on_quadratic() {
        let b = ParamBounds::default();
        let out = levenberg_marquardt(linear_residuals(TARGET, 1.0), b.midpoint(), &b, &LocalConfig::default()).unwrap();
        for j in 0..5 {
            assert!((out.x[j] - TARGET[j]).abs() < 1e-5, "{:?}", out.x);
        }
        assert!(out.objective <= out.start_objective);
    }

    #[test]
    fn converged_start_stays() {
        let b = ParamBounds::default();
        let cfg = LocalConfig::default();
        let out = levenberg_marquardt(linear_residuals(TARGET, 1.0), TARGET, &b, &cfg).unwrap();
        assert!(out.iterations <= 1);
        for j in 0..5 {
            assert!((out.x[j] - TARGET[j]).abs() <= cfg.step_tol);
        }
    }

    #[test]
    fn start_on_bound_stays_feasible() {
        let b = ParamBounds::default();
        let start = b.upper.to_array();
        // minimizer outside the box pulls against the upper bounds
        let outside = [0.5, 0.5, 0.9, 5.0, 2.0];
        let out = levenberg_marquardt(linear_residuals(outside, 1.0), start, &b, &LocalConfig::default()).unwrap();
        assert!(b.contains(&crate::model::ModelParams::from_array(out.x)));
        assert!(out.objective <= out.start_objective);
    }

    #[test]
    fn weight_scaling_keeps_argmin() {
        let b = ParamBounds::default();
        let cfg = LocalConfig::default();
        let a = levenberg_marquardt(linear_residuals(TARGET, 1.0), b.midpoint(), &b, &cfg).unwrap();
        let c = levenberg_marquardt(linear_residuals(TARGET, 37.0), b.midpoint(), &b, &cfg).unwrap();
        for j in 0..5 {
            assert!((a.x[j] - c.x[j]).abs() < 1e-9);
        }
        assert!((c.start_objective / a.start_objective - 37.0).abs() < 1e-9);
    }

    #[test]
    fn fixed_components_untouched() {
        let b = ModelVariant::RBergomi.apply(&ParamBounds::default());
        let out = levenberg_marquardt(linear_residuals(TARGET, 1.0), b.midpoint(), &b, &LocalConfig::default()).unwrap();
        assert_eq!(out.x[4], 1.0);
    }

    #[test]
    fn non_finite_start_is_an_error() {
        let b = ParamBounds::default();
        let r = levenberg_marquardt(|_: &[f64; 5]| Ok(vec![f64::NAN]), b.midpoint(), &b, &LocalConfig::default());
        assert!(matches!(r, Err(Error::NonFinite(_))));
    }
}

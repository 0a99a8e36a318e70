//! Exact joint simulation of fractional Brownian motion and its driving
//! Wiener process.
//!
//! The fBm is represented through the Molchan–Golosov kernel
//! `B^H_t = ∫₀ᵗ K_H(t,u) dW_u`, so `(B^H, W)` sampled on a grid is a single
//! Gaussian vector. Its covariance has three blocks: the fBm autocovariance,
//! `min(t,s)` for `W`, and the cross block `E[B^H_t W_s] = ∫₀^{t∧s} K_H(t,u) du`.
//! The vector is drawn by Cholesky factorization.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{domain, Error, Result};
use crate::quadrature::integrate;
use crate::rng::{stream_rng, Stream};

/// Number of paths sharing one RNG stream. Block boundaries, not threads,
/// determine the random numbers each path sees.
pub const PATH_BLOCK: usize = 1024;

/// Default absolute tolerance for the cross-covariance quadrature.
pub const CROSS_COV_TOL: f64 = 1e-10;

/// Regular nodes closer than this fraction of a step to a quoted maturity are
/// dropped in favour of the maturity.
const MERGE_FRACTION: f64 = 0.01;

const JITTER_STEPS: [f64; 5] = [1e-14, 1e-13, 1e-12, 1e-11, 1e-10];

/// Simulation times in years. `t = 0` is never a node: every process
/// starts at zero there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    times: Vec<f64>,
    steps_per_year: u32,
}

impl TimeGrid {
    pub fn new(times: Vec<f64>, steps_per_year: u32) -> Result<Self> {
        if steps_per_year == 0 {
            return domain("steps_per_year must be positive");
        }
        if times.is_empty() {
            return domain("time grid is empty");
        }
        if !(times[0] > 0.0) || !times.iter().all(|t| t.is_finite()) {
            return domain("grid times must be finite and start strictly after 0");
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return domain("grid times must be strictly increasing");
        }
        Ok(Self { times, steps_per_year })
    }

    /// Regular grid `k / steps_per_year` up to the largest maturity, with every
    /// maturity inserted exactly.
    pub fn with_maturities(steps_per_year: u32, maturities: &[f64]) -> Result<Self> {
        if steps_per_year == 0 {
            return domain("steps_per_year must be positive");
        }
        if maturities.is_empty() {
            return domain("at least one maturity is required");
        }
        if let Some(bad) = maturities.iter().find(|t| !(**t > 0.0) || !t.is_finite()) {
            return domain(format!("maturity {bad} must be positive and finite"));
        }
        let mut quoted = maturities.to_vec();
        quoted.sort_by(f64::total_cmp);
        quoted.dedup();
        let horizon = *quoted.last().unwrap();
        let step = 1.0 / f64::from(steps_per_year);
        let min_gap = MERGE_FRACTION * step;

        let mut times = Vec::with_capacity((horizon * f64::from(steps_per_year)) as usize + quoted.len());
        let mut k = 1u64;
        loop {
            let t = k as f64 / f64::from(steps_per_year);
            if t >= horizon {
                break;
            }
            let near = quoted.partition_point(|&m| m < t - min_gap);
            let clashes = quoted.get(near).is_some_and(|&m| (m - t).abs() <= min_gap);
            if !clashes {
                times.push(t);
            }
            k += 1;
        }
        times.extend_from_slice(&quoted);
        times.sort_by(f64::total_cmp);
        Self::new(times, steps_per_year)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn steps_per_year(&self) -> u32 {
        self.steps_per_year
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Step lengths; the first step starts at 0.
    pub fn increments(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.times
            .iter()
            .map(|&t| {
                let dt = t - prev;
                prev = t;
                dt
            })
            .collect()
    }

    /// Index of an exact grid node.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        self.times.binary_search_by(|x| x.total_cmp(&t)).ok()
    }
}

/// Hurst index with its Molchan–Golosov normalizing constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HurstParams {
    h: f64,
    c_h: f64,
}

impl HurstParams {
    pub fn new(h: f64) -> Result<Self> {
        Ok(Self { h, c_h: molchan_constant(h)? })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn c_h(&self) -> f64 {
        self.c_h
    }
}

fn check_hurst(h: f64) -> Result<()> {
    if h > 0.0 && h < 1.0 {
        Ok(())
    } else {
        domain(format!("Hurst index {h} outside (0, 1)"))
    }
}

/// `r(t,s) = ½(t^{2H} + s^{2H} − |t−s|^{2H})`.
pub fn fbm_autocovariance(t: f64, s: f64, h: f64) -> Result<f64> {
    check_hurst(h)?;
    if !(t >= 0.0 && s >= 0.0) {
        return domain(format!("times must be non-negative, got ({t}, {s})"));
    }
    Ok(autocov(t, s, h))
}

#[inline]
fn autocov(t: f64, s: f64, h: f64) -> f64 {
    if t == s {
        return t.powf(2.0 * h);
    }
    let two_h = 2.0 * h;
    0.5 * (t.powf(two_h) + s.powf(two_h) - (t - s).abs().powf(two_h))
}

/// `C_H = √(2H Γ(3/2 − H) / (Γ(H + 1/2) Γ(2 − 2H)))`.
pub fn molchan_constant(h: f64) -> Result<f64> {
    check_hurst(h)?;
    if h == 0.5 {
        return Ok(1.0);
    }
    Ok((2.0 * h * gamma(1.5 - h) / (gamma(h + 0.5) * gamma(2.0 - 2.0 * h))).sqrt())
}

/// Integrands of the unit cross-covariance after the substitution
/// `u = 1 − v^{1/(H+½)}`, which absorbs the `(1−u)^{H−½}` endpoint factor.
///
/// With `b = H + ½`:
/// `F(x) = ∫₀ˣ K_H(1,u) du = C_H/b · [I(x) + (½ − H) x^b J(x)]` where
/// `I(x) = ∫₀ˣ u^{½−H}(1−u)^{H−½} du = (1/b)∫_{(1−x)^b}^1 φ(v) dv` and
/// `J(x) = ∫ₓ¹ y^{−2H}(1−y)^{H−½} dy = (1/b)∫₀^{(1−x)^b} ψ(v) dv`.
struct UnitKernel {
    h: f64,
    b: f64,
    inv_b: f64,
    c_h: f64,
}

impl UnitKernel {
    fn new(hurst: HurstParams) -> Self {
        let b = hurst.h + 0.5;
        Self { h: hurst.h, b, inv_b: 1.0 / b, c_h: hurst.c_h }
    }

    #[inline]
    fn phi(&self, v: f64) -> f64 {
        let base = (1.0 - v.powf(self.inv_b)).max(0.0);
        base.powf(0.5 - self.h)
    }

    #[inline]
    fn psi(&self, v: f64) -> f64 {
        (1.0 - v.powf(self.inv_b)).powf(-2.0 * self.h)
    }

    fn combine(&self, x: f64, i_part: f64, j_part: f64) -> f64 {
        self.c_h / self.b * (i_part + (0.5 - self.h) * x.powf(self.b) * j_part)
    }

    /// Scale from an error in F to errors in the two raw integrals.
    fn raw_tol(&self, tol: f64) -> f64 {
        0.5 * tol * self.b * self.b / self.c_h
    }

    fn unit(&self, x: f64, tol: f64) -> Result<f64> {
        if x <= 0.0 {
            return Ok(0.0);
        }
        let x = x.min(1.0);
        let w = (1.0 - x).powf(self.b);
        let raw = self.raw_tol(tol);
        let i_part = integrate(|v| self.phi(v), w, 1.0, raw)?.value * self.inv_b;
        let j_part = if w > 0.0 {
            let weight = ((0.5 - self.h).abs() * x.powf(self.b)).max(1e-300);
            integrate(|v| self.psi(v), 0.0, w, (raw / weight).max(raw))?.value * self.inv_b
        } else {
            0.0
        };
        Ok(self.combine(x, i_part, j_part))
    }
}

/// `E[B^H_t W_s] = ∫₀^{t∧s} K_H(t,u) du`, by adaptive quadrature.
///
/// Self-similarity of the kernel reduces every pair to
/// `t^{H+½} · F(min(s/t, 1))`.
pub fn fbm_wiener_cross_covariance(t: f64, s: f64, h: f64, tol: f64) -> Result<f64> {
    check_hurst(h)?;
    if !(t >= 0.0 && s >= 0.0) {
        return domain(format!("times must be non-negative, got ({t}, {s})"));
    }
    if !(tol > 0.0) {
        return domain("tolerance must be positive");
    }
    if t == 0.0 || s == 0.0 {
        return Ok(0.0);
    }
    if h == 0.5 {
        return Ok(t.min(s));
    }
    let kernel = UnitKernel::new(HurstParams::new(h)?);
    let scale = t.powf(h + 0.5);
    Ok(scale * kernel.unit((s / t).min(1.0), tol / scale.max(1.0))?)
}

/// Cross block `C[i][j] = E[B^H_{t_i} W_{t_j}]` for a whole grid, row-major.
///
/// All distinct ratios `t_j / t_i` are visited in one sweep so each piece of
/// the two integrals is computed once.
fn cross_block(grid: &TimeGrid, hurst: HurstParams, tol: f64) -> Result<Vec<f64>> {
    let t = grid.times();
    let n = t.len();
    let mut out = vec![0.0; n * n];
    if hurst.h == 0.5 {
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = t[i].min(t[j]);
            }
        }
        return Ok(out);
    }
    let kernel = UnitKernel::new(hurst);
    let horizon_scale = grid.horizon().powf(kernel.b).max(1.0);
    let raw = kernel.raw_tol(tol / horizon_scale);

    // (w, flat index) for every strictly-lower pair; w = (1 − t_j/t_i)^b
    let mut points: Vec<(f64, f64, usize)> = Vec::with_capacity(n * (n - 1) / 2);
    for i in 1..n {
        for j in 0..i {
            let x = t[j] / t[i];
            points.push(((1.0 - x).powf(kernel.b), x, i * n + j));
        }
    }
    points.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Segment tolerances proportional to length keep the summed error ≤ raw.
    let mut acc_phi = 0.0;
    let mut acc_psi = 0.0;
    let mut prev = 0.0;
    let mut partial = Vec::with_capacity(points.len());
    for &(w, x, idx) in &points {
        if w > prev {
            let seg = (w - prev) * raw;
            acc_phi += integrate(|v| kernel.phi(v), prev, w, seg)?.value;
            acc_psi += integrate(|v| kernel.psi(v), prev, w, seg)?.value;
            prev = w;
        }
        partial.push((acc_phi, acc_psi, x, idx));
    }
    let total_phi = acc_phi + integrate(|v| kernel.phi(v), prev, 1.0, ((1.0 - prev) * raw).max(raw * 1e-3))?.value;

    let diag_unit = kernel.combine(1.0, total_phi * kernel.inv_b, 0.0);
    for (i, &ti) in t.iter().enumerate() {
        let scale = ti.powf(kernel.b);
        for j in i..n {
            out[i * n + j] = scale * diag_unit;
        }
    }
    for (a_phi, a_psi, x, idx) in partial {
        let i = idx / n;
        let unit = kernel.combine(x, (total_phi - a_phi) * kernel.inv_b, a_psi * kernel.inv_b);
        out[idx] = t[i].powf(kernel.b) * unit;
    }
    Ok(out)
}

/// Covariance of the stacked vector `(B^H_{t_1..t_n}, W_{t_1..t_n})` and its
/// lower Cholesky factor.
#[derive(Debug, Clone)]
pub struct JointCovariance {
    grid: TimeGrid,
    hurst: HurstParams,
    sigma: DMatrix<f64>,
    factor: DMatrix<f64>,
    jitter: f64,
}

impl JointCovariance {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn hurst(&self) -> HurstParams {
        self.hurst
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn factor(&self) -> &DMatrix<f64> {
        &self.factor
    }

    /// Diagonal jitter that was needed for the factorization (0 if none).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// `‖LLᵀ − Σ‖_F / ‖Σ‖_F`.
    pub fn reconstruction_error(&self) -> f64 {
        let rebuilt = &self.factor * self.factor.transpose();
        (rebuilt - &self.sigma).norm() / self.sigma.norm()
    }

    /// Draws one block of joint paths. Path `p` of block `b` is path
    /// `b * PATH_BLOCK + p` of the full bundle.
    pub fn sample_block(&self, seed: u64, block: usize, len: usize, orthogonal: bool) -> GaussianBlock {
        let n = self.grid.len();
        let m = 2 * n;
        let mut rng = stream_rng(seed, Stream::Gaussian, block as u64);
        let z: Vec<f64> = (0..m * len).map(|_| StandardNormal.sample(&mut rng)).collect();
        let z = DMatrix::from_vec(m, len, z);
        let x = &self.factor * z;

        let mut fbm = Vec::with_capacity(n * len);
        let mut w = Vec::with_capacity(n * len);
        for col in x.column_iter() {
            let col = col.as_slice();
            fbm.extend_from_slice(&col[..n]);
            w.extend_from_slice(&col[n..]);
        }

        let w_tilde = orthogonal.then(|| {
            let sqrt_dt: Vec<f64> = self.grid.increments().iter().map(|d| d.sqrt()).collect();
            let mut rng = stream_rng(seed, Stream::Orthogonal, block as u64);
            let mut out = Vec::with_capacity(n * len);
            for _ in 0..len {
                for s in &sqrt_dt {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    out.push(z * s);
                }
            }
            out
        });
        GaussianBlock { len, n, fbm, w, w_tilde }
    }

    /// Writes `sigma.csv` and `factor.csv` into `dir`.
    pub fn write_debug_csv(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.into(), source })?;
        for (name, mat) in [("sigma.csv", &self.sigma), ("factor.csv", &self.factor)] {
            let path = dir.join(name);
            let io = |source| Error::Io { path: path.clone(), source };
            let mut out = BufWriter::new(File::create(&path).map_err(io)?);
            for row in mat.row_iter() {
                let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                writeln!(out, "{}", line.join(",")).map_err(io)?;
            }
            out.flush().map_err(io)?;
        }
        Ok(())
    }
}

/// Assembles and factorizes the joint covariance on `grid`.
pub fn build_joint_covariance(grid: &TimeGrid, h: f64) -> Result<JointCovariance> {
    let hurst = HurstParams::new(h)?;
    let n = grid.len();
    let t = grid.times();
    let cross = cross_block(grid, hurst, CROSS_COV_TOL)?;
    let m = 2 * n;
    let sigma = DMatrix::from_fn(m, m, |r, c| match (r < n, c < n) {
        (true, true) => autocov(t[r], t[c], h),
        (false, false) => t[r - n].min(t[c - n]),
        (true, false) => cross[r * n + (c - n)],
        (false, true) => cross[c * n + (r - n)],
    });
    let (factor, jitter) = factorize_with_jitter(&sigma)?;
    Ok(JointCovariance { grid: grid.clone(), hurst, sigma, factor, jitter })
}

/// Cholesky factorization, retrying with escalating diagonal jitter.
pub fn factorize_with_jitter(sigma: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    if let Some(l) = cholesky(sigma, 0.0) {
        return Ok((l, 0.0));
    }
    let scale = sigma.diagonal().iter().fold(0.0f64, |a, &d| a.max(d.abs())).max(f64::MIN_POSITIVE);
    for step in JITTER_STEPS {
        let jitter = step * scale;
        if let Some(l) = cholesky(sigma, jitter) {
            log::debug!("covariance factorized with jitter {jitter:e}");
            return Ok((l, jitter));
        }
    }
    let min_eigenvalue = sigma.clone().symmetric_eigenvalues().min();
    Err(Error::Factorization { jitter: JITTER_STEPS[JITTER_STEPS.len() - 1] * scale, min_eigenvalue })
}

/// Plain Cholesky of `a + jitter·I`; `None` when a pivot is not positive.
fn cholesky(a: &DMatrix<f64>, jitter: f64) -> Option<DMatrix<f64>> {
    let m = a.nrows();
    // row-major working copy so the inner products run over contiguous memory
    let mut l = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..=i {
            let (row_i, row_j) = (&l[i * m..i * m + j], &l[j * m..j * m + j]);
            let dot: f64 = row_i.iter().zip(row_j).map(|(x, y)| x * y).sum();
            if i == j {
                let pivot = a[(i, i)] + jitter - dot;
                if !(pivot > 0.0) || !pivot.is_finite() {
                    return None;
                }
                l[i * m + i] = pivot.sqrt();
            } else {
                l[i * m + j] = (a[(i, j)] - dot) / l[j * m + j];
            }
        }
    }
    Some(DMatrix::from_row_slice(m, m, &l))
}

/// One block of sampled paths, row-major `len × n`.
#[derive(Debug, Clone)]
pub struct GaussianBlock {
    pub len: usize,
    pub n: usize,
    pub fbm: Vec<f64>,
    pub w: Vec<f64>,
    pub w_tilde: Option<Vec<f64>>,
}

impl GaussianBlock {
    pub fn fbm_row(&self, p: usize) -> &[f64] {
        &self.fbm[p * self.n..(p + 1) * self.n]
    }

    pub fn w_row(&self, p: usize) -> &[f64] {
        &self.w[p * self.n..(p + 1) * self.n]
    }

    pub fn w_tilde_row(&self, p: usize) -> Option<&[f64]> {
        self.w_tilde.as_ref().map(|v| &v[p * self.n..(p + 1) * self.n])
    }
}

/// Splits `path_count` into `(block index, block length)` pairs.
pub fn blocks(path_count: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..path_count.div_ceil(PATH_BLOCK)).map(move |b| (b, PATH_BLOCK.min(path_count - b * PATH_BLOCK)))
}

/// Fully materialized sample of `path_count` joint paths.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBundle {
    grid: TimeGrid,
    hurst: f64,
    seed: u64,
    path_count: usize,
    fbm: Vec<f64>,
    w: Vec<f64>,
    w_tilde: Vec<f64>,
}

impl PathBundle {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path_count(&self) -> usize {
        self.path_count
    }

    /// `B^H` at the grid times for path `p`.
    pub fn fbm_path(&self, p: usize) -> &[f64] {
        let n = self.grid.len();
        &self.fbm[p * n..(p + 1) * n]
    }

    /// `W` at the grid times for path `p`.
    pub fn w_path(&self, p: usize) -> &[f64] {
        let n = self.grid.len();
        &self.w[p * n..(p + 1) * n]
    }

    /// Independent `W̃` increments (already scaled by `√Δt`) for path `p`.
    pub fn w_tilde_increments(&self, p: usize) -> &[f64] {
        let n = self.grid.len();
        &self.w_tilde[p * n..(p + 1) * n]
    }
}

/// Draws `path_count` exact joint paths.
pub fn sample_paths(cov: &JointCovariance, path_count: usize, seed: u64) -> Result<PathBundle> {
    if path_count == 0 {
        return domain("path_count must be at least 1");
    }
    let parts: Vec<GaussianBlock> = blocks(path_count)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(b, len)| cov.sample_block(seed, b, len, true))
        .collect();
    let n = cov.grid.len();
    let mut fbm = Vec::with_capacity(n * path_count);
    let mut w = Vec::with_capacity(n * path_count);
    let mut w_tilde = Vec::with_capacity(n * path_count);
    for part in parts {
        fbm.extend(part.fbm);
        w.extend(part.w);
        w_tilde.extend(part.w_tilde.expect("orthogonal increments requested"));
    }
    Ok(PathBundle { grid: cov.grid.clone(), hurst: cov.hurst.h, seed, path_count, fbm, w, w_tilde })
}

//! Real-coded genetic algorithm over a box.
//!
//! Tournament selection, blend (BLX-0.5) crossover, Gaussian mutation and
//! elitism. Evaluations of one generation run in parallel; every random draw
//! comes from a single sequential stream, so the outcome depends only on the
//! seed.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng::{stream_rng, Stream};

use super::ParamBounds;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneticConfig {
    pub population: usize,
    pub generations: usize,
    pub seed: u64,
    pub tournament: usize,
    pub elite: usize,
    /// Mutation standard deviation as a fraction of each bound width.
    pub mutation_scale: f64,
}

impl GeneticConfig {
    pub fn new(population: usize, generations: usize, seed: u64) -> Self {
        Self { population, generations, seed, tournament: 3, elite: 2, mutation_scale: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneticOutcome {
    pub best: [f64; 5],
    pub best_value: f64,
    pub evaluations: usize,
    /// Best value after the initial population and after each generation.
    pub history: Vec<f64>,
}

fn evaluate<F>(f: &F, pop: &[[f64; 5]]) -> Vec<f64>
where
    F: Fn(&[f64; 5]) -> f64 + Sync,
{
    pop.par_iter()
        .map(|x| {
            let v = f(x);
            if v.is_finite() { v } else { f64::INFINITY }
        })
        .collect()
}

/// Index order by value, ties broken by index.
fn ranking(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    idx
}

/// Minimizes `f` over `bounds`; always returns the best point seen.
pub fn genetic_minimize<F>(f: F, bounds: &ParamBounds, cfg: &GeneticConfig) -> GeneticOutcome
where
    F: Fn(&[f64; 5]) -> f64 + Sync,
{
    let lower = bounds.lower.to_array();
    let upper = bounds.upper.to_array();
    let width: Vec<f64> = lower.iter().zip(&upper).map(|(l, u)| u - l).collect();
    let free: Vec<usize> = (0..5).filter(|&j| width[j] > 0.0).collect();
    let mut rng = stream_rng(cfg.seed, Stream::Genetic, 0);
    let population = cfg.population.max(1);

    let mut pop: Vec<[f64; 5]> = (0..population)
        .map(|_| {
            let mut x = lower;
            for &j in &free {
                x[j] = lower[j] + width[j] * rng.random::<f64>();
            }
            x
        })
        .collect();
    let mut values = evaluate(&f, &pop);
    let mut evaluations = pop.len();
    let order = ranking(&values);
    let mut history = vec![values[order[0]]];

    let clamp = |j: usize, v: f64| v.clamp(lower[j], upper[j]);
    let mutation_rate = if free.is_empty() { 0.0 } else { 1.0 / free.len() as f64 };

    for _ in 0..cfg.generations {
        let order = ranking(&values);
        let elite = cfg.elite.min(population);
        let mut next: Vec<[f64; 5]> = order[..elite].iter().map(|&i| pop[i]).collect();

        let tournament = |rng: &mut rand_chacha::ChaCha8Rng| -> usize {
            let mut best = rng.random_range(0..population);
            for _ in 1..cfg.tournament.max(1) {
                let c = rng.random_range(0..population);
                if values[c] < values[best] || (values[c] == values[best] && c < best) {
                    best = c;
                }
            }
            best
        };

        while next.len() < population {
            let a = pop[tournament(&mut rng)];
            let b = pop[tournament(&mut rng)];
            let mut child = lower;
            for &j in &free {
                let (lo, hi) = if a[j] <= b[j] { (a[j], b[j]) } else { (b[j], a[j]) };
                let d = hi - lo;
                let v = lo - 0.5 * d + 2.0 * d * rng.random::<f64>();
                child[j] = clamp(j, v);
            }
            for &j in &free {
                if rng.random::<f64>() < mutation_rate {
                    let noise = Normal::new(0.0, cfg.mutation_scale * width[j]).expect("positive width");
                    child[j] = clamp(j, child[j] + noise.sample(&mut rng));
                }
            }
            next.push(child);
        }

        // elites keep their known values
        let fresh = evaluate(&f, &next[elite..]);
        evaluations += fresh.len();
        let mut next_values: Vec<f64> = order[..elite].iter().map(|&i| values[i]).collect();
        next_values.extend(fresh);
        pop = next;
        values = next_values;
        history.push(values[ranking(&values)[0]]);
    }

    let best = ranking(&values)[0];
    GeneticOutcome { best: pop[best], best_value: values[best], evaluations, history }
}

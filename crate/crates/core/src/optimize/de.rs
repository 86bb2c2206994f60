//! DE/rand/1/bin with Deb's feasibility rules and box clipping.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Method, OptProblem, OptResult, Optimizer, Point, Scored};
use crate::circuit::SPRINGS;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DEConfig {
    /// Population size, `10n` for five springs.
    pub population: usize,
    pub mutation: f64,
    pub crossover: f64,
    pub max_generations: u64,
    /// Stop once the best feasible value moves less than this over
    /// `stagnation_window` generations.
    pub stagnation_tol: f64,
    pub stagnation_window: u64,
    pub constraint_tol: f64,
}

impl Default for DEConfig {
    fn default() -> Self {
        Self {
            population: 10 * SPRINGS,
            mutation: 0.7,
            crossover: 0.9,
            max_generations: 2000,
            stagnation_tol: 1e-6,
            stagnation_window: 200,
            constraint_tol: 1e-8,
        }
    }
}

impl DEConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 4 {
            return Err(Error::InvalidConfig("population must be at least 4".into()));
        }
        if !(self.mutation > 0.0 && self.mutation < 2.0) {
            return Err(Error::InvalidConfig("mutation factor must lie in (0, 2)".into()));
        }
        if !(0.0..=1.0).contains(&self.crossover) {
            return Err(Error::InvalidConfig("crossover rate must lie in [0, 1]".into()));
        }
        if self.constraint_tol < 0.0 || self.stagnation_tol < 0.0 {
            return Err(Error::InvalidConfig("tolerances must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Runs differential evolution. Deterministic in `(problem, cfg, seed)`.
/// A run that never reaches feasibility returns a result flagged infeasible.
pub fn differential_evolution(problem: &OptProblem, cfg: &DEConfig, seed: u64) -> Result<OptResult> {
    let (best, generations) = evolve(problem, cfg, seed, &[])?;
    Ok(problem.finish(
        &best,
        cfg.constraint_tol,
        Method::DifferentialEvolution,
        seed,
        generations,
    ))
}

/// The evolution loop. `injected` points replace the first members of the
/// random initial population.
pub(super) fn evolve(
    problem: &OptProblem,
    cfg: &DEConfig,
    seed: u64,
    injected: &[Point],
) -> Result<(Point, u64)> {
    cfg.validate()?;
    problem.validate()?;
    let tol = cfg.constraint_tol;
    let np = cfg.population;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bounds = problem.bounds;

    let mut population: Vec<Scored> = (0..np)
        .map(|i| {
            let point = injected.get(i).copied().unwrap_or_else(|| {
                std::array::from_fn(|j| {
                    let (lo, hi) = bounds[j];
                    if hi > lo {
                        rng.gen_range(lo..=hi)
                    } else {
                        lo
                    }
                })
            });
            problem.score(&clip(point, &bounds))
        })
        .collect();

    let mut best = best_index(problem, &population, tol);
    let mut window_start_key: Option<f64> = None;
    let mut window_start_gen = 0;
    let mut generation = 0;
    while generation < cfg.max_generations {
        generation += 1;
        let mut next = population.clone();
        for (i, slot) in next.iter_mut().enumerate() {
            let [r1, r2, r3] = distinct_others(&mut rng, np, i);
            let forced = rng.gen_range(0..SPRINGS);
            let target = &population[i].point;
            let trial: Point = std::array::from_fn(|j| {
                if j == forced || rng.gen::<f64>() < cfg.crossover {
                    population[r1].point[j]
                        + cfg.mutation * (population[r2].point[j] - population[r3].point[j])
                } else {
                    target[j]
                }
            });
            let scored = problem.score(&clip(trial, &bounds));
            if problem.deb_cmp(&scored, &population[i], tol) != Ordering::Greater {
                *slot = scored;
            }
        }
        population = next;
        best = best_index(problem, &population, tol);

        let incumbent = &population[best];
        if incumbent.max_violation <= tol {
            let key = problem.sense.key(incumbent.value);
            match window_start_key {
                None => {
                    window_start_key = Some(key);
                    window_start_gen = generation;
                }
                Some(start) => {
                    if generation - window_start_gen >= cfg.stagnation_window {
                        if (start - key).abs() < cfg.stagnation_tol {
                            break;
                        }
                        window_start_key = Some(key);
                        window_start_gen = generation;
                    }
                }
            }
        }
    }
    Ok((population[best].point, generation))
}

fn best_index(problem: &OptProblem, population: &[Scored], tol: f64) -> usize {
    (0..population.len())
        .min_by(|&a, &b| {
            problem
                .deb_cmp(&population[a], &population[b], tol)
                .then(a.cmp(&b))
        })
        .expect("population is non-empty")
}

fn distinct_others(rng: &mut ChaCha8Rng, n: usize, exclude: usize) -> [usize; 3] {
    let mut picked = [usize::MAX; 3];
    let mut k = 0;
    while k < 3 {
        let r = rng.gen_range(0..n);
        if r != exclude && !picked[..k].contains(&r) {
            picked[k] = r;
            k += 1;
        }
    }
    picked
}

pub(super) fn clip(mut p: Point, bounds: &[(f64, f64); SPRINGS]) -> Point {
    for (x, &(lo, hi)) in p.iter_mut().zip(bounds) {
        *x = x.clamp(lo, hi);
    }
    p
}

/// Registry entry for differential evolution.
#[derive(Clone, Debug, Default)]
pub struct DifferentialEvolution {
    pub config: DEConfig,
}

impl Optimizer for DifferentialEvolution {
    fn name(&self) -> &str {
        "de"
    }

    fn method(&self) -> Method {
        Method::DifferentialEvolution
    }

    fn optimize(&self, problem: &OptProblem, seed: u64) -> Result<OptResult> {
        differential_evolution(problem, &self.config, seed)
    }
}

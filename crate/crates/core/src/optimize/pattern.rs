//! Multi-start derivative-free local search.
//!
//! Each start runs a pattern search on an exact-penalty merit function. Every
//! poll tries the coordinate directions, all pairwise diagonals and a few
//! random unit directions; when none improves it falls back to directions
//! tangent to the constraints nearly active at the current step size. The
//! tangent set lets the search slide along faces and edges that are not
//! axis-aligned.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::de::clip;
use super::{Method, OptProblem, OptResult, Optimizer, Point, Scored};
use crate::circuit::SPRINGS;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomSearchConfig {
    pub starts: usize,
    /// Initial poll step as a fraction of the widest box side.
    pub initial_step: f64,
    pub step_tol: f64,
    pub penalty: f64,
    pub random_directions: usize,
    pub max_evaluations_per_start: usize,
    pub constraint_tol: f64,
}

impl Default for RandomSearchConfig {
    fn default() -> Self {
        Self {
            starts: 16,
            initial_step: 0.25,
            step_tol: 1e-8,
            penalty: 1e4,
            random_directions: 8,
            max_evaluations_per_start: 40_000,
            constraint_tol: 1e-8,
        }
    }
}

impl RandomSearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.starts == 0 {
            return Err(Error::InvalidConfig("random search needs at least one start".into()));
        }
        if !(self.initial_step > 0.0) || !(self.step_tol > 0.0) || !(self.penalty > 0.0) {
            return Err(Error::InvalidConfig(
                "step sizes and penalty must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Best of `cfg.starts` pattern searches from uniform random starts.
pub fn random_search(problem: &OptProblem, cfg: &RandomSearchConfig, seed: u64) -> Result<OptResult> {
    cfg.validate()?;
    problem.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bounds = problem.bounds;
    let width = box_width(problem);
    let fixed = fixed_directions();

    let mut best: Option<Scored> = None;
    let mut evaluations = 0u64;
    for _ in 0..cfg.starts {
        let start: Point = std::array::from_fn(|j| {
            let (lo, hi) = bounds[j];
            if hi > lo {
                rng.gen_range(lo..=hi)
            } else {
                lo
            }
        });
        let (local, used) = descend(problem, cfg, &mut rng, &fixed, start, cfg.initial_step * width);
        evaluations += used;
        best = match best {
            None => Some(local),
            Some(b) => {
                if problem.deb_cmp(&local, &b, cfg.constraint_tol) == Ordering::Less {
                    Some(local)
                } else {
                    Some(b)
                }
            }
        };
    }
    let best = best.expect("at least one start");
    Ok(problem.finish(
        &best.point,
        cfg.constraint_tol,
        Method::RandomSearch,
        seed,
        evaluations,
    ))
}

/// Pattern search from each of `starts`, keeping the Deb-best end point.
/// Used to continue a solution from nearby problems.
pub fn polish(
    problem: &OptProblem,
    cfg: &RandomSearchConfig,
    starts: &[Point],
    seed: u64,
) -> Result<Option<OptResult>> {
    cfg.validate()?;
    problem.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = box_width(problem);
    let fixed = fixed_directions();
    let mut best: Option<Scored> = None;
    let mut evaluations = 0u64;
    for &start in starts {
        let (local, used) = descend(problem, cfg, &mut rng, &fixed, start, cfg.initial_step * width);
        evaluations += used;
        best = match best {
            Some(b) if problem.deb_cmp(&local, &b, cfg.constraint_tol) != Ordering::Less => Some(b),
            _ => Some(local),
        };
    }
    Ok(best.map(|b| {
        problem.finish(&b.point, cfg.constraint_tol, Method::RandomSearch, seed, evaluations)
    }))
}

fn box_width(problem: &OptProblem) -> f64 {
    problem
        .bounds
        .iter()
        .map(|(lo, hi)| hi - lo)
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE)
}

fn merit(problem: &OptProblem, s: &Scored, penalty: f64) -> f64 {
    let key = problem.sense.key(s.value);
    if key.is_nan() || (key == f64::NEG_INFINITY && s.total_violation > 0.0) {
        return f64::INFINITY;
    }
    key + penalty * s.total_violation
}

fn descend(
    problem: &OptProblem,
    cfg: &RandomSearchConfig,
    rng: &mut ChaCha8Rng,
    fixed: &[Point],
    start: Point,
    mut step: f64,
) -> (Scored, u64) {
    let bounds = problem.bounds;
    let mut current = problem.score(&clip(start, &bounds));
    let mut current_merit = merit(problem, &current, cfg.penalty);
    let mut evaluations = 1u64;
    let mut directions: Vec<Point> = Vec::new();
    let max_step = step;

    while step >= cfg.step_tol && (evaluations as usize) < cfg.max_evaluations_per_start {
        directions.clear();
        directions.extend_from_slice(fixed);
        for _ in 0..cfg.random_directions {
            directions.push(random_unit(rng));
        }
        let mut improved = false;
        for phase in 0..2 {
            if phase == 1 {
                // Only worth the constraint gradients once the cheap set fails.
                directions = tangent_directions(&problem.near_active_normals(&current.point, step));
            }
            for d in &directions {
                let trial: Point = std::array::from_fn(|j| current.point[j] + step * d[j]);
                let trial = clip(trial, &bounds);
                if trial == current.point {
                    continue;
                }
                let scored = problem.score(&trial);
                evaluations += 1;
                let m = merit(problem, &scored, cfg.penalty);
                if m < current_merit {
                    current = scored;
                    current_merit = m;
                    improved = true;
                    break;
                }
            }
            if improved {
                break;
            }
        }
        if improved {
            step = (step * 2.0).min(max_step);
        } else {
            step *= 0.5;
        }
    }
    (current, evaluations)
}

/// Generators of the tangent cone of the near-active constraints: the
/// coordinate directions projected onto the common null space, plus for each
/// normal the direction that backs off it while staying on all the others.
/// With dependent normals the back-off directions come from a maximal
/// independent subset, in order.
fn tangent_directions(normals: &[Point]) -> Vec<Point> {
    if normals.is_empty() {
        return Vec::new();
    }
    let mut basis: Vec<Point> = Vec::new();
    let mut independent: Vec<Point> = Vec::new();
    for n in normals {
        let mut v = *n;
        for b in &basis {
            let d = dot(&v, b);
            for j in 0..SPRINGS {
                v[j] -= d * b[j];
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-9 {
            basis.push(v.map(|x| x / norm));
            independent.push(*n);
        }
    }
    let mut dirs = Vec::new();
    let mut push = |v: Point| {
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-9 {
            let u = v.map(|x| x / norm);
            if !dirs.iter().any(|d: &Point| dot(d, &u) > 1.0 - 1e-12) {
                dirs.push(u);
            }
        }
    };
    for i in 0..SPRINGS {
        let mut v = [0.0; SPRINGS];
        v[i] = 1.0;
        for b in &basis {
            let d = dot(&v, b);
            for j in 0..SPRINGS {
                v[j] -= d * b[j];
            }
        }
        push(v);
        push(v.map(|x| -x));
    }
    if let Some(inv) = invert_gram(&independent) {
        for k in 0..independent.len() {
            // d = -N (N^T N)^-1 e_k, so n_k . d = -1 and n_j . d = 0.
            let mut d = [0.0; SPRINGS];
            for (l, n) in independent.iter().enumerate() {
                for j in 0..SPRINGS {
                    d[j] -= inv[l][k] * n[j];
                }
            }
            push(d);
        }
    }
    dirs
}

fn dot(a: &Point, b: &Point) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Inverse of the Gram matrix of `normals` by Gauss-Jordan elimination.
fn invert_gram(normals: &[Point]) -> Option<Vec<Vec<f64>>> {
    let m = normals.len();
    let mut a: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let mut row: Vec<f64> = (0..m).map(|j| dot(&normals[i], &normals[j])).collect();
            row.extend((0..m).map(|j| if i == j { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    for col in 0..m {
        let pivot = (col..m).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[pivot][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, pivot);
        let p = a[col][col];
        for x in a[col].iter_mut() {
            *x /= p;
        }
        for r in 0..m {
            if r != col {
                let f = a[r][col];
                if f != 0.0 {
                    for j in 0..2 * m {
                        a[r][j] -= f * a[col][j];
                    }
                }
            }
        }
    }
    Some(a.into_iter().map(|row| row[m..].to_vec()).collect())
}

fn fixed_directions() -> Vec<Point> {
    let mut dirs = Vec::new();
    for i in 0..SPRINGS {
        for sign in [1.0, -1.0] {
            let mut d = [0.0; SPRINGS];
            d[i] = sign;
            dirs.push(d);
        }
    }
    let diag = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..SPRINGS {
        for j in i + 1..SPRINGS {
            for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let mut d = [0.0; SPRINGS];
                d[i] = si * diag;
                d[j] = sj * diag;
                dirs.push(d);
            }
        }
    }
    dirs
}

fn random_unit(rng: &mut ChaCha8Rng) -> Point {
    loop {
        let v: Point = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-3 && norm <= 1.0 {
            return v.map(|x| x / norm);
        }
    }
}

/// Registry entry for multi-start pattern search.
#[derive(Clone, Debug, Default)]
pub struct RandomSearch {
    pub config: RandomSearchConfig,
}

impl Optimizer for RandomSearch {
    fn name(&self) -> &str {
        "rs"
    }

    fn method(&self) -> Method {
        Method::RandomSearch
    }

    fn optimize(&self, problem: &OptProblem, seed: u64) -> Result<OptResult> {
        random_search(problem, &self.config, seed)
    }
}

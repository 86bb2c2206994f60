//! Constrained global optimization over the five elastic limits.
//!
//! Black-box methods implement [`Optimizer`] and are looked up by name in an
//! [`OptimizerRegistry`]; the dense simplex in [`simplex`] handles the linear
//! sub-problems exactly.

mod de;
mod pattern;
mod registry;
pub mod simplex;

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::circuit::{conductance_unchecked, resistance_unchecked, SpringSet, SPRINGS};
use crate::error::{Error, Result};
use crate::plasticity::{slacks_unchecked, terminal_force_unchecked, PlasticDomain};

pub use de::{differential_evolution, DEConfig, DifferentialEvolution};
pub use pattern::{polish, random_search, RandomSearch, RandomSearchConfig};
pub use registry::{Optimizer, OptimizerRegistry};
pub use simplex::{simplex_lp, LinearProgram, LpSolution, Relation};

pub type Point = [f64; SPRINGS];
pub type ScalarFn = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Maximize,
    Minimize,
}

impl Sense {
    /// Maps a value onto a key where smaller is always better.
    fn key(self, value: f64) -> f64 {
        match self {
            Sense::Minimize => value,
            Sense::Maximize => -value,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "DE")]
    DifferentialEvolution,
    RandomSearch,
    #[serde(rename = "LP")]
    LinearProgramming,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::DifferentialEvolution => "DE",
            Method::RandomSearch => "RandomSearch",
            Method::LinearProgramming => "LP",
        })
    }
}

/// `coeffs · c <= bound`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub coeffs: Point,
    pub bound: f64,
}

/// Objective, box, and constraints over the five limits.
///
/// Nonlinear constraints return a slack that is nonnegative when satisfied.
/// When `enforce_domain` is set, the four feasibility slacks of `domain` are
/// constraints too. When `require_connected` is set, a design whose terminals
/// are disconnected carries a unit violation.
#[derive(Clone)]
pub struct OptProblem {
    pub objective: ScalarFn,
    pub sense: Sense,
    pub bounds: [(f64, f64); SPRINGS],
    pub linear: Vec<LinearConstraint>,
    pub nonlinear: Vec<ScalarFn>,
    pub domain: PlasticDomain,
    pub enforce_domain: bool,
    pub require_connected: bool,
}

impl fmt::Debug for OptProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OptProblem")
            .field("sense", &self.sense)
            .field("bounds", &self.bounds)
            .field("linear", &self.linear)
            .field("nonlinear", &self.nonlinear.len())
            .field("domain", &self.domain)
            .field("enforce_domain", &self.enforce_domain)
            .field("require_connected", &self.require_connected)
            .finish()
    }
}

/// Objective value and constraint violation of one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scored {
    pub point: Point,
    pub value: f64,
    pub total_violation: f64,
    pub max_violation: f64,
}

impl OptProblem {
    /// Box `[0, 2]` per spring, domain constraints on, nothing else.
    pub fn new(
        objective: impl Fn(&Point) -> f64 + Send + Sync + 'static,
        sense: Sense,
        domain: PlasticDomain,
    ) -> Self {
        Self {
            objective: Arc::new(objective),
            sense,
            bounds: [(0.0, 2.0); SPRINGS],
            linear: Vec::new(),
            nonlinear: Vec::new(),
            domain,
            enforce_domain: true,
            require_connected: false,
        }
    }

    pub fn with_bounds(mut self, bounds: [(f64, f64); SPRINGS]) -> Self {
        self.bounds = bounds;
        self
    }

    pub fn with_linear(mut self, coeffs: Point, bound: f64) -> Self {
        self.linear.push(LinearConstraint { coeffs, bound });
        self
    }

    pub fn with_nonlinear(mut self, slack: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> Self {
        self.nonlinear.push(Arc::new(slack));
        self
    }

    pub fn without_domain_constraints(mut self) -> Self {
        self.enforce_domain = false;
        self
    }

    pub fn requiring_connection(mut self) -> Self {
        self.require_connected = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (i, &(lo, hi)) in self.bounds.iter().enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(Error::InvalidConfig(format!(
                    "bounds of spring {} are [{lo}, {hi}]",
                    i + 1
                )));
            }
            if lo < 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "lower bound of spring {} is negative",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    pub fn score(&self, c: &Point) -> Scored {
        let mut total = 0.0;
        let mut max: f64 = 0.0;
        let mut add = |slack: f64| {
            let v = if slack.is_nan() { 1.0 } else { (-slack).max(0.0) };
            total += v;
            max = max.max(v);
        };
        for lc in &self.linear {
            let lhs: f64 = lc.coeffs.iter().zip(c).map(|(a, x)| a * x).sum();
            add(lc.bound - lhs);
        }
        if self.enforce_domain {
            for s in slacks_unchecked(c, self.domain) {
                add(s);
            }
        }
        for g in &self.nonlinear {
            add(g(c));
        }
        if self.require_connected && resistance_unchecked(c).is_infinite() {
            add(-1.0);
        }
        Scored {
            point: *c,
            value: (self.objective)(c),
            total_violation: total,
            max_violation: max,
        }
    }

    /// Outward normals of the constraints within `eps` of being violated at
    /// `c`: linear rows, domain rows, box faces, and finite-difference
    /// gradients of nonlinear slacks.
    pub fn near_active_normals(&self, c: &Point, eps: f64) -> Vec<Point> {
        let mut normals = Vec::new();
        let mut linear = |row: Point, bound: f64| {
            let lhs: f64 = row.iter().zip(c).map(|(a, x)| a * x).sum();
            let norm = row.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm > 0.0 && bound - lhs <= eps * norm {
                normals.push(row);
            }
        };
        for lc in &self.linear {
            linear(lc.coeffs, lc.bound);
        }
        if self.enforce_domain {
            for (row, bound) in self.domain.feasibility_rows() {
                linear(row, bound);
            }
        }
        for (i, &(lo, hi)) in self.bounds.iter().enumerate() {
            let mut e = [0.0; SPRINGS];
            if c[i] - lo <= eps {
                e[i] = -1.0;
                normals.push(e);
            } else if hi - c[i] <= eps {
                e[i] = 1.0;
                normals.push(e);
            }
        }
        const H: f64 = 1e-7;
        for g in &self.nonlinear {
            let g0 = g(c);
            if !g0.is_finite() {
                continue;
            }
            let grad: Point = std::array::from_fn(|j| {
                let mut x = *c;
                x[j] += H;
                (g(&x) - g0) / H
            });
            let norm = grad.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm.is_finite() && norm > 0.0 && g0 <= eps * norm {
                normals.push(grad.map(|a| -a));
            }
        }
        normals
    }

    /// Deb's feasibility rules: feasible beats infeasible, lower total
    /// violation wins among infeasible points, better objective among
    /// feasible ones. `Less` means `a` is better.
    pub fn deb_cmp(&self, a: &Scored, b: &Scored, tol: f64) -> Ordering {
        let fa = a.max_violation <= tol;
        let fb = b.max_violation <= tol;
        match (fa, fb) {
            (true, false) => Ordering::Less,
            (false, true) => Ordering::Greater,
            (false, false) => a.total_violation.total_cmp(&b.total_violation),
            (true, true) => {
                let ka = nan_last(self.sense.key(a.value));
                let kb = nan_last(self.sense.key(b.value));
                ka.total_cmp(&kb)
            }
        }
    }

    pub fn finish(&self, c: &Point, tol: f64, method: Method, seed: u64, iterations: u64) -> OptResult {
        let s = self.score(c);
        OptResult {
            c_star: SpringSet::new(*c).expect("optimizers stay inside a nonnegative box"),
            value: s.value,
            force: terminal_force_unchecked(c, self.domain),
            resistance: resistance_unchecked(c),
            conductance: conductance_unchecked(c),
            cost: c.iter().sum(),
            feasible: s.max_violation <= tol,
            max_violation: s.max_violation,
            sense: self.sense,
            domain: self.domain,
            method,
            seed,
            iterations,
        }
    }
}

fn nan_last(x: f64) -> f64 {
    if x.is_nan() {
        f64::INFINITY
    } else {
        x
    }
}

/// A solved point together with every functional evaluated there.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub c_star: SpringSet,
    pub value: f64,
    #[serde(rename = "F")]
    pub force: f64,
    #[serde(rename = "R", with = "crate::report::extended_real")]
    pub resistance: f64,
    #[serde(rename = "G")]
    pub conductance: f64,
    #[serde(rename = "C")]
    pub cost: f64,
    pub feasible: bool,
    pub max_violation: f64,
    pub sense: Sense,
    pub domain: PlasticDomain,
    pub method: Method,
    pub seed: u64,
    pub iterations: u64,
}

impl OptResult {
    fn deb_cmp(&self, other: &Self) -> Ordering {
        match (self.feasible, other.feasible) {
            (true, false) => Ordering::Less,
            (false, true) => Ordering::Greater,
            (false, false) => self.max_violation.total_cmp(&other.max_violation),
            (true, true) => nan_last(self.sense.key(self.value))
                .total_cmp(&nan_last(self.sense.key(other.value))),
        }
    }
}

/// Largest terminal force reachable with fabrication cost at most `cost_cap`.
///
/// The force LP has a whole face of optima, so the reported vertex depends on
/// pivoting order. The LP is always posed in the coordinates where springs 1,
/// 3 and 5 plasticize and mapped back, which makes the two domains report
/// mirror-image vertices.
pub fn max_terminal_force(domain: PlasticDomain, cost_cap: f64) -> Result<LpSolution> {
    let canonical = PlasticDomain::D135;
    let mut rows: Vec<(Vec<f64>, f64)> = canonical
        .feasibility_rows()
        .iter()
        .map(|(r, b)| (r.to_vec(), *b))
        .collect();
    rows.push((vec![1.0; SPRINGS], cost_cap));
    let mut sol = simplex_lp(&canonical.force_coefficients(), &rows, Sense::Maximize)?;
    if domain != canonical {
        let v = &sol.vertex;
        sol.vertex = vec![v[1], v[0], v[2], v[4], v[3]];
    }
    Ok(sol)
}

/// The Deb-rule best of several runs on the same problem, ties going to the
/// lower seed.
pub fn best_of(results: &[OptResult]) -> Result<OptResult> {
    results
        .iter()
        .min_by(|a, b| a.deb_cmp(b).then(a.seed.cmp(&b.seed)))
        .cloned()
        .ok_or_else(|| Error::InvalidConfig("best_of needs at least one result".into()))
}

/// Among points whose objective is within `tie_tol` (relative to
/// `max(1, |value|)`) of `incumbent`, finds the one of least Euclidean norm.
///
/// Several studies have whole faces of optimal designs; this picks a single
/// deterministic representative. Returns the incumbent unchanged when the
/// search does not produce a feasible improvement in norm.
pub fn min_norm_representative(
    problem: &OptProblem,
    incumbent: &OptResult,
    cfg: &DEConfig,
    seed: u64,
    tie_tol: f64,
) -> Result<OptResult> {
    if !incumbent.feasible {
        return Ok(incumbent.clone());
    }
    let slack = tie_tol * incumbent.value.abs().max(1.0);
    let target = incumbent.value;
    let objective = problem.objective.clone();
    let sense = problem.sense;
    let mut refined = problem.clone();
    refined.objective = Arc::new(|c: &Point| c.iter().map(|x| x * x).sum());
    refined.sense = Sense::Minimize;
    refined.nonlinear.push(Arc::new(move |c: &Point| {
        let v = objective(c);
        match sense {
            Sense::Maximize => v - (target - slack),
            Sense::Minimize => (target + slack) - v,
        }
    }));
    let start = *incumbent.c_star.limits();
    let (point, generations) = de::evolve(&refined, cfg, seed, &[start])?;
    let candidate = problem.finish(
        &point,
        cfg.constraint_tol,
        incumbent.method,
        incumbent.seed,
        incumbent.iterations + generations,
    );
    let norm = |c: &SpringSet| c.limits().iter().map(|x| x * x).sum::<f64>();
    if candidate.feasible && norm(&candidate.c_star) <= norm(&incumbent.c_star) {
        Ok(candidate)
    } else {
        Ok(incumbent.clone())
    }
}

/// How a caller asks for optimizers on the command line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MethodSelection {
    One(String),
    All,
}

impl FromStr for MethodSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "both" | "all" => Ok(MethodSelection::All),
            "" => Err(Error::InvalidConfig("empty method name".into())),
            name => Ok(MethodSelection::One(name.to_ascii_lowercase())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn force_lp_vertices() {
        let a = max_terminal_force(PlasticDomain::D135, 2.0).unwrap();
        let b = max_terminal_force(PlasticDomain::D234, 2.0).unwrap();
        assert_eq!(a.value, 1.0);
        assert_eq!(b.value, 1.0);
        assert_eq!(a.vertex, vec![1.0, 0.0, 0.0, 1.0, 0.0]);
        assert_eq!(b.vertex, vec![0.0, 1.0, 0.0, 0.0, 1.0]);
        let half = max_terminal_force(PlasticDomain::D135, 1.0).unwrap();
        assert!((half.value - 0.5).abs() < 1e-12);
    }

    fn result(feasible: bool, value: f64, seed: u64) -> OptResult {
        OptResult {
            c_star: SpringSet::zeros(),
            value,
            force: 0.0,
            resistance: f64::INFINITY,
            conductance: 0.0,
            cost: 0.0,
            feasible,
            max_violation: if feasible { 0.0 } else { 1.0 },
            sense: Sense::Maximize,
            domain: PlasticDomain::D135,
            method: Method::DifferentialEvolution,
            seed,
            iterations: 0,
        }
    }

    #[test]
    fn best_of_prefers_feasible() {
        let best = best_of(&[result(true, 3.0, 1), result(false, 5.0, 0)]).unwrap();
        assert_eq!(best.value, 3.0);
    }

    #[test]
    fn best_of_compares_values() {
        let best = best_of(&[result(true, 3.71531, 0), result(true, 3.74999, 1)]).unwrap();
        assert_eq!(best.value, 3.74999);
    }

    #[test]
    fn best_of_singleton_and_ties() {
        let only = result(true, 1.0, 9);
        assert_eq!(best_of(std::slice::from_ref(&only)).unwrap(), only);
        let best = best_of(&[result(true, 1.0, 9), result(true, 1.0, 4)]).unwrap();
        assert_eq!(best.seed, 4);
        assert!(best_of(&[]).is_err());
    }

    #[test]
    fn score_counts_every_constraint() {
        let p = OptProblem::new(|c| c[0], Sense::Maximize, PlasticDomain::D135)
            .with_linear([1.0; 5], 2.0)
            .with_nonlinear(|c| c[0] - 0.5)
            .requiring_connection();
        // c3 > c2 breaks the domain, sum 3 > 2, c1 < 0.5, terminals disconnected.
        let s = p.score(&[0.0, 0.0, 3.0, 0.0, 0.0]);
        assert!((s.max_violation - 3.0).abs() < 1e-15);
        assert!((s.total_violation - (1.0 + 3.0 + 3.0 + 0.5 + 1.0)).abs() < 1e-12);
    }

    fn scored(value: f64, total: f64) -> Scored {
        Scored {
            point: [0.0; 5],
            value,
            total_violation: total,
            max_violation: total,
        }
    }

    proptest! {
        #[test]
        fn deb_order_is_transitive(
            v in prop::array::uniform3(-2.0..2.0f64),
            w in prop::array::uniform3(prop_oneof![Just(0.0), 0.0..1.0f64]),
        ) {
            let p = OptProblem::new(|c| c[0], Sense::Maximize, PlasticDomain::D135);
            let s: Vec<Scored> = (0..3).map(|i| scored(v[i], w[i])).collect();
            for a in &s {
                for b in &s {
                    for c in &s {
                        let ab = p.deb_cmp(a, b, 1e-8);
                        let bc = p.deb_cmp(b, c, 1e-8);
                        if ab != Ordering::Greater && bc != Ordering::Greater {
                            prop_assert_ne!(p.deb_cmp(a, c, 1e-8), Ordering::Greater);
                        }
                    }
                }
            }
        }
    }
}

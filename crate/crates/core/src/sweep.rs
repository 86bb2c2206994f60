//! Weight-grid studies over `(k1, k2)`.
//!
//! Four studies share one harness. Each grid cell and each requested domain is
//! an independent job: both registered black-box optimizers run from seeds
//! derived from `(master_seed, cell, domain)` and the Deb-best result is kept.
//! Continuation rounds then restart a local search at every cell from the
//! optima of its grid neighbours on the same domain, which recovers narrow
//! basins a single global run can miss. Finally each optimum is moved to the
//! least-norm point of its optimal face. Every round reads only the previous
//! round's results and writes in grid order, so the report does not depend on
//! scheduling.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{conductance_unchecked, resistance_unchecked, SPRINGS};
use crate::error::{Error, Result};
use crate::optimize::{
    best_of, min_norm_representative, polish, DEConfig, DifferentialEvolution, OptProblem, OptResult,
    Optimizer, Point, RandomSearch, RandomSearchConfig, Sense,
};
use crate::plasticity::{terminal_force_unchecked, PlasticDomain};

/// Minimum terminal force every study keeps.
pub const FORCE_FLOOR: f64 = 0.75;
/// Fabrication cost cap of the two maximization studies.
pub const COST_CAP: f64 = 2.0;
/// Level the weighted functional must reach in the cost studies.
pub const FUNCTIONAL_FLOOR: f64 = 0.5;
/// Upper bound on each limit in the cost studies, which carry no cost cap.
pub const OPEN_BOX_UPPER: f64 = 10.0;
/// Most continuation rounds run after the independent solves.
pub const MAX_CONTINUATION_ROUNDS: usize = 10;
/// Componentwise distance under which two designs share a cluster.
pub const CLUSTER_TOL: f64 = 0.03;
/// Candidate values closer than this make a cell degenerate.
pub const DEGENERATE_GAP: f64 = 0.005;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Study {
    /// Maximize `k1 F + k2 R` with cost at most 2 and `F >= 0.75`.
    A,
    /// Maximize `k1 F + k2 G` under the same constraints.
    B,
    /// Minimize cost with `F >= 0.75` and `k1 F + k2 R >= 0.5`.
    C,
    /// Minimize cost with `F >= 0.75` and `k1 F + k2 G >= 0.5`.
    D,
}

impl Study {
    pub const ALL: [Study; 4] = [Study::A, Study::B, Study::C, Study::D];

    pub fn sense(self) -> Sense {
        match self {
            Study::A | Study::B => Sense::Maximize,
            Study::C | Study::D => Sense::Minimize,
        }
    }

    /// The weighted functional `k1 F + k2 R` (A, C) or `k1 F + k2 G` (B, D).
    pub fn functional(self, k1: f64, k2: f64, domain: PlasticDomain, c: &Point) -> f64 {
        let f = terminal_force_unchecked(c, domain);
        match self {
            Study::A | Study::C => k1 * f + k2 * resistance_unchecked(c),
            Study::B | Study::D => k1 * f + k2 * conductance_unchecked(c),
        }
    }

    pub fn problem(self, k1: f64, k2: f64, domain: PlasticDomain) -> OptProblem {
        let force = domain.force_coefficients();
        let floor = force.map(|a| -a);
        match self {
            Study::A | Study::B => OptProblem::new(
                move |c: &Point| self.functional(k1, k2, domain, c),
                Sense::Maximize,
                domain,
            )
            .with_linear([1.0; SPRINGS], COST_CAP)
            .with_linear(floor, -FORCE_FLOOR)
            .requiring_connection(),
            Study::C | Study::D => {
                OptProblem::new(|c: &Point| c.iter().sum(), Sense::Minimize, domain)
                    .with_bounds([(0.0, OPEN_BOX_UPPER); SPRINGS])
                    .with_linear(floor, -FORCE_FLOOR)
                    .with_nonlinear(move |c: &Point| {
                        self.functional(k1, k2, domain, c) - FUNCTIONAL_FLOOR
                    })
                    .requiring_connection()
            }
        }
    }
}

impl fmt::Display for Study {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Study::A => "a",
            Study::B => "b",
            Study::C => "c",
            Study::D => "d",
        })
    }
}

impl FromStr for Study {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "a" => Ok(Study::A),
            "b" => Ok(Study::B),
            "c" => Ok(Study::C),
            "d" => Ok(Study::D),
            other => Err(Error::InvalidConfig(format!("unknown study {other:?}"))),
        }
    }
}

/// Evenly spaced axis values `start, start + step, ..., <= stop`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl AxisRange {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        let r = Self { start, stop, step };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !self.start.is_finite() || !self.stop.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "bad axis {}:{}:{}",
                self.start, self.stop, self.step
            )));
        }
        if self.stop < self.start {
            return Err(Error::InvalidConfig("axis range is empty".into()));
        }
        Ok(())
    }

    /// Values rounded to 12 decimals so `0.1 + 2 * 0.1` prints as `0.3`.
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..n)
            .map(|i| {
                let v = self.start + i as f64 * self.step;
                (v * 1e12).round() / 1e12
            })
            .collect()
    }
}

impl FromStr for AxisRange {
    type Err = Error;

    /// `start:stop:step`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::InvalidConfig(format!(
                "grid axis {s:?} is not start:stop:step"
            )));
        }
        let num = |p: &str| {
            p.trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidConfig(format!("grid axis {s:?}: {e}")))
        };
        Self::new(num(parts[0])?, num(parts[1])?, num(parts[2])?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub k1: AxisRange,
    pub k2: AxisRange,
}

impl Grid {
    pub fn square(axis: AxisRange) -> Self {
        Self { k1: axis, k2: axis }
    }

    /// `0.1..1.0` in steps of `0.1` on both axes.
    pub fn coarse() -> Self {
        Self::square(AxisRange {
            start: 0.1,
            stop: 1.0,
            step: 0.1,
        })
    }

    /// `0.1..0.4 x 0.1..0.2` in steps of `0.02`, the zoom used for study C.
    pub fn fine() -> Self {
        Self {
            k1: AxisRange {
                start: 0.1,
                stop: 0.4,
                step: 0.02,
            },
            k2: AxisRange {
                start: 0.1,
                stop: 0.2,
                step: 0.02,
            },
        }
    }

    /// Cells ordered by `k1`, then `k2`.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let k2s = self.k2.values();
        self.k1
            .values()
            .into_iter()
            .flat_map(|a| k2s.iter().map(move |&b| (a, b)))
            .collect()
    }
}

impl FromStr for Grid {
    type Err = Error;

    /// One axis spec shared by both weights, or `k1spec,k2spec`.
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(',') {
            Some((a, b)) => Ok(Self {
                k1: a.parse()?,
                k2: b.parse()?,
            }),
            None => Ok(Self::square(s.parse()?)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudySpec {
    pub study: Study,
    pub grid: Grid,
    pub domains: Vec<PlasticDomain>,
}

impl StudySpec {
    /// Coarse grid, both domains.
    pub fn new(study: Study) -> Self {
        Self {
            study,
            grid: Grid::coarse(),
            domains: PlasticDomain::ALL.to_vec(),
        }
    }

    pub fn with_grid(mut self, grid: Grid) -> Self {
        self.grid = grid;
        self
    }

    pub fn with_domains(mut self, domains: Vec<PlasticDomain>) -> Self {
        self.domains = domains;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.k1.validate()?;
        self.grid.k2.validate()?;
        if self.domains.is_empty() {
            return Err(Error::InvalidConfig("no domain requested".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub de: DEConfig,
    pub rs: RandomSearchConfig,
    /// Relative objective slack defining the optimal face searched for the
    /// least-norm representative. Zero disables the refinement.
    pub tie_tol: f64,
    pub value_tol: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            de: DEConfig::default(),
            rs: RandomSearchConfig::default(),
            tie_tol: 1e-5,
            value_tol: 0.02,
        }
    }
}

/// One grid location solved on one domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub k1: f64,
    pub k2: f64,
    pub domain: PlasticDomain,
    pub result: OptResult,
    /// No optimizer found a feasible design.
    pub flagged: bool,
    pub label: String,
    pub cluster: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub spec: StudySpec,
    pub master_seed: u64,
    pub cells: Vec<SweepCell>,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for one job, independent of the order jobs run in.
pub fn cell_seed(master_seed: u64, cell: usize, domain: PlasticDomain, stream: u64) -> u64 {
    let d = match domain {
        PlasticDomain::D135 => 1,
        PlasticDomain::D234 => 2,
    };
    let mut h = splitmix64(master_seed);
    for part in [cell as u64, d, stream] {
        h = splitmix64(h ^ part);
    }
    h
}

/// Runs every cell of `spec`, then labels and clusters the results.
pub fn run_study(spec: &StudySpec, cfg: &SweepConfig, master_seed: u64) -> Result<SweepReport> {
    spec.validate()?;
    cfg.de.validate()?;
    cfg.rs.validate()?;
    let optimizers: Vec<Box<dyn Optimizer>> = vec![
        Box::new(DifferentialEvolution {
            config: cfg.de.clone(),
        }),
        Box::new(RandomSearch {
            config: cfg.rs.clone(),
        }),
    ];
    let points = spec.grid.points();
    let n2 = spec.grid.k2.values().len();
    let jobs: Vec<(usize, PlasticDomain)> = (0..points.len())
        .flat_map(|i| spec.domains.iter().map(move |&d| (i, d)))
        .collect();
    let problem = |&(i, d): &(usize, PlasticDomain)| {
        let (k1, k2) = points[i];
        spec.study.problem(k1, k2, d)
    };

    let mut results: Vec<OptResult> = jobs
        .par_iter()
        .map(|job| {
            let p = problem(job);
            let runs = optimizers
                .iter()
                .enumerate()
                .map(|(s, o)| o.optimize(&p, cell_seed(master_seed, job.0, job.1, s as u64)))
                .collect::<Result<Vec<_>>>()?;
            best_of(&runs)
        })
        .collect::<Result<_>>()?;

    let neighbours: Vec<Vec<usize>> = jobs
        .iter()
        .map(|&(i, d)| {
            let (a, b) = ((i / n2) as i64, (i % n2) as i64);
            jobs.iter()
                .enumerate()
                .filter(|(_, &(j, e))| {
                    let (x, y) = ((j / n2) as i64, (j % n2) as i64);
                    e == d && j != i && (x - a).abs() <= 1 && (y - b).abs() <= 1
                })
                .map(|(k, _)| k)
                .collect()
        })
        .collect();
    for round in 0..MAX_CONTINUATION_ROUNDS {
        let improved: Vec<Option<OptResult>> = jobs
            .par_iter()
            .enumerate()
            .map(|(k, job)| {
                let starts: Vec<Point> = neighbours[k]
                    .iter()
                    .filter(|&&n| results[n].feasible)
                    .map(|&n| *results[n].c_star.limits())
                    .collect();
                let p = problem(job);
                let stream = (optimizers.len() + 1 + round) as u64;
                let seed = cell_seed(master_seed, job.0, job.1, stream);
                Ok(polish(&p, &cfg.rs, &starts, seed)?
                    .filter(|candidate| improves(candidate, &results[k])))
            })
            .collect::<Result<_>>()?;
        let mut changed = false;
        for (slot, better) in results.iter_mut().zip(improved) {
            if let Some(b) = better {
                *slot = b;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let cells = jobs
        .par_iter()
        .zip(results)
        .map(|(job, best)| {
            let (k1, k2) = points[job.0];
            let best = if cfg.tie_tol > 0.0 {
                let seed = cell_seed(master_seed, job.0, job.1, u64::MAX);
                min_norm_representative(&problem(job), &best, &cfg.de, seed, cfg.tie_tol)?
            } else {
                best
            };
            Ok(SweepCell {
                k1,
                k2,
                domain: job.1,
                flagged: !best.feasible,
                result: best,
                label: String::new(),
                cluster: 0,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut report = SweepReport {
        spec: spec.clone(),
        master_seed,
        cells,
    };
    classify_cells(&mut report, cfg.value_tol);
    Ok(report)
}

/// A strictly better feasible value, or feasibility where there was none.
fn improves(candidate: &OptResult, incumbent: &OptResult) -> bool {
    match (candidate.feasible, incumbent.feasible) {
        (true, false) => true,
        (false, _) => false,
        (true, true) => {
            let margin = 1e-6 * incumbent.value.abs().max(1.0);
            match candidate.sense {
                Sense::Maximize => candidate.value > incumbent.value + margin,
                Sense::Minimize => candidate.value < incumbent.value - margin,
            }
        }
    }
}

/// Reference design of study A with the higher-force branch: `(F, R) = (1, 2)`.
pub const BLUE: (f64, f64) = (1.0, 2.0);
/// Reference design of study A with the higher-resistance branch.
pub const RED: (f64, f64) = (0.75, 10.0 / 3.0);
/// Design every study-B cell is expected to reach.
pub const UNIFORM: [f64; SPRINGS] = [0.5, 0.5, 0.0, 0.5, 0.5];
/// Least fabrication cost compatible with the force floor.
pub const BASE_COST: f64 = 2.0 * FORCE_FLOOR;

/// Labels every cell and assigns cluster ids.
///
/// Study A cells are `red`, `blue`, `degenerate` (the two reference values are
/// within [`DEGENERATE_GAP`] at this weight pair) or `other`; study B cells are
/// `uniform` or `other`; cost studies are `base` when the cost reaches its
/// floor and `elevated` otherwise. Cells without a feasible design are
/// `infeasible`. Clusters group designs within [`CLUSTER_TOL`] of the first
/// member, in cell order.
pub fn classify_cells(report: &mut SweepReport, value_tol: f64) {
    let study = report.spec.study;
    let near = |a: f64, b: f64| (a - b).abs() <= value_tol;
    for cell in &mut report.cells {
        let r = &cell.result;
        cell.label = if cell.flagged {
            "infeasible"
        } else {
            match study {
                Study::A => {
                    let gap = (cell.k1 * RED.0 + cell.k2 * RED.1)
                        - (cell.k1 * BLUE.0 + cell.k2 * BLUE.1);
                    if gap.abs() < DEGENERATE_GAP {
                        "degenerate"
                    } else if near(r.force, RED.0) && near(r.resistance, RED.1) {
                        "red"
                    } else if near(r.force, BLUE.0) && near(r.resistance, BLUE.1) {
                        "blue"
                    } else {
                        "other"
                    }
                }
                Study::B => {
                    let on_design = r
                        .c_star
                        .limits()
                        .iter()
                        .zip(UNIFORM)
                        .all(|(x, u)| near(*x, u));
                    if on_design && near(r.force, 1.0) && near(r.conductance, 0.5) {
                        "uniform"
                    } else {
                        "other"
                    }
                }
                Study::C | Study::D => {
                    if (r.cost - BASE_COST).abs() <= value_tol / 2.0 {
                        "base"
                    } else {
                        "elevated"
                    }
                }
            }
        }
        .to_string();
    }

    let mut representatives: Vec<[f64; SPRINGS]> = Vec::new();
    for cell in &mut report.cells {
        let c = *cell.result.c_star.limits();
        let found = representatives.iter().position(|rep| chebyshev(rep, &c) <= CLUSTER_TOL);
        cell.cluster = match found {
            Some(id) => id,
            None => {
                representatives.push(c);
                representatives.len() - 1
            }
        };
    }
}

fn chebyshev(a: &[f64; SPRINGS], b: &[f64; SPRINGS]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// A line `k2 = slope * k1 + intercept` in the weight plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdFit {
    /// `+inf` (serialized as null) for a vertical line.
    #[serde(with = "crate::report::extended_real")]
    pub slope: f64,
    /// For a vertical line, the `k1` it passes through.
    pub intercept: f64,
    pub separable: bool,
    /// Distance from the line to the nearest labeled point.
    pub margin: f64,
}

impl ThresholdFit {
    /// `k2` on the line at `k1`.
    pub fn k2_at(&self, k1: f64) -> f64 {
        self.slope * k1 + self.intercept
    }

    /// Signed offset of `(k1, k2)` above the line, or right of a vertical one.
    pub fn side(&self, k1: f64, k2: f64) -> f64 {
        if self.slope.is_infinite() {
            k1 - self.intercept
        } else {
            k2 - self.k2_at(k1)
        }
    }
}

type P2 = [f64; 2];

fn sub(a: P2, b: P2) -> P2 {
    [a[0] - b[0], a[1] - b[1]]
}

fn dot(a: P2, b: P2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Closest point to `p` on segment `ab`.
fn project(p: P2, a: P2, b: P2) -> P2 {
    let ab = sub(b, a);
    let len2 = dot(ab, ab);
    if len2 == 0.0 {
        return a;
    }
    let t = (dot(sub(p, a), ab) / len2).clamp(0.0, 1.0);
    [a[0] + t * ab[0], a[1] + t * ab[1]]
}

/// Nearest pair between the convex hulls of two point sets. For disjoint
/// hulls it is attained between a vertex of one and an edge of the other, and
/// every segment between two points of a set lies inside its hull.
fn nearest_pair(a: &[P2], b: &[P2]) -> (P2, P2) {
    let mut best = (f64::INFINITY, a[0], b[0]);
    let mut consider = |p: P2, q: P2| {
        let d = dot(sub(p, q), sub(p, q));
        if d < best.0 {
            best = (d, p, q);
        }
    };
    for &p in a {
        for (i, &s) in b.iter().enumerate() {
            for &t in &b[i..] {
                consider(p, project(p, s, t));
            }
        }
    }
    for &q in b {
        for (i, &s) in a.iter().enumerate() {
            for &t in &a[i..] {
                consider(project(q, s, t), q);
            }
        }
    }
    (best.1, best.2)
}

/// Maximum-margin separating line between two labeled point sets.
///
/// The candidate is the perpendicular bisector of the nearest pair between the
/// two convex hulls; it separates whenever the hulls are disjoint. When the
/// check fails the fit is returned with `separable = false`.
pub fn fit_max_margin(a: &[P2], b: &[P2]) -> Result<ThresholdFit> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::NeedTwoClasses(format!(
            "got {} and {} points",
            a.len(),
            b.len()
        )));
    }
    let (p, q) = nearest_pair(a, b);
    let n = sub(q, p);
    let mid = [(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0];
    let norm = dot(n, n).sqrt();
    let (slope, intercept) = if norm == 0.0 || n[1] == 0.0 {
        (f64::INFINITY, mid[0])
    } else {
        let slope = -n[0] / n[1];
        (slope, mid[1] - slope * mid[0])
    };
    let signed = |x: P2| {
        if norm == 0.0 {
            0.0
        } else {
            dot(sub(x, mid), n) / norm
        }
    };
    let side_a: Vec<f64> = a.iter().map(|&x| signed(x)).collect();
    let side_b: Vec<f64> = b.iter().map(|&x| signed(x)).collect();
    let separable = norm > 0.0 && side_a.iter().all(|&s| s < 0.0) && side_b.iter().all(|&s| s > 0.0);
    let margin = side_a
        .iter()
        .chain(&side_b)
        .map(|s| s.abs())
        .fold(f64::INFINITY, f64::min);
    Ok(ThresholdFit {
        slope,
        intercept,
        separable,
        margin: if separable { margin } else { 0.0 },
    })
}

/// Max-margin line between the cells labeled `class_a` and `class_b`, over
/// every domain in the report.
pub fn detect_threshold(report: &SweepReport, class_a: &str, class_b: &str) -> Result<ThresholdFit> {
    let points = |label: &str| -> Vec<P2> {
        report
            .cells
            .iter()
            .filter(|c| c.label == label)
            .map(|c| [c.k1, c.k2])
            .collect()
    };
    fit_max_margin(&points(class_a), &points(class_b)).map_err(|e| match e {
        Error::NeedTwoClasses(detail) => {
            Error::NeedTwoClasses(format!("{class_a:?} vs {class_b:?}: {detail}"))
        }
        other => other,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    NotEvaluated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub study: Study,
    pub clause: String,
    pub status: CheckStatus,
    pub detail: String,
}

/// Which claim a check covers, and the cells that break it.
fn check(study: Study, clause: &str, evaluated: bool, failures: Vec<String>) -> Check {
    let status = if !evaluated {
        CheckStatus::NotEvaluated
    } else if failures.is_empty() {
        CheckStatus::Pass
    } else {
        CheckStatus::Fail
    };
    let detail = match status {
        CheckStatus::NotEvaluated => "no cells".to_string(),
        CheckStatus::Pass => String::new(),
        CheckStatus::Fail => failures.join("; "),
    };
    Check {
        study,
        clause: clause.to_string(),
        status,
        detail,
    }
}

fn describe(cell: &SweepCell) -> String {
    let r = &cell.result;
    format!(
        "({}, {}) {} c={} F={:.4} R={:.4} G={:.4} C={:.4}",
        cell.k1, cell.k2, cell.domain, r.c_star, r.force, r.resistance, r.conductance, r.cost
    )
}

/// Largest per-location gap between the best values on the two domains.
pub fn domain_value_gaps(report: &SweepReport) -> Vec<((f64, f64), f64)> {
    let mut by_cell: BTreeMap<(u64, u64), Vec<f64>> = BTreeMap::new();
    for cell in &report.cells {
        by_cell
            .entry((cell.k1.to_bits(), cell.k2.to_bits()))
            .or_default()
            .push(cell.result.value);
    }
    by_cell
        .into_iter()
        .filter(|(_, v)| v.len() > 1)
        .map(|((a, b), v)| {
            let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
            ((f64::from_bits(a), f64::from_bits(b)), hi - lo)
        })
        .collect()
}

/// Clause-by-clause comparison of the sweep data with the structural claims
/// about each study's optima. Reports without cells give `NotEvaluated`.
pub fn verify_propositions(reports: &[SweepReport]) -> Vec<Check> {
    const DESIGN_TOL: f64 = 0.02;
    const VALUE_TOL: f64 = 0.01;
    let mut out = Vec::new();
    for report in reports {
        let study = report.spec.study;
        let cells = &report.cells;
        let evaluated = !cells.is_empty();
        let failing = |pred: &dyn Fn(&SweepCell) -> bool| -> Vec<String> {
            cells.iter().filter(|c| !pred(c)).map(describe).collect()
        };
        let near = |a: f64, b: f64, tol: f64| (a - b).abs() <= tol;

        out.push(check(
            study,
            "every cell has a feasible optimum",
            evaluated,
            failing(&|c| !c.flagged),
        ));
        let gaps: Vec<String> = domain_value_gaps(report)
            .into_iter()
            .filter(|(_, g)| *g > 2e-3)
            .map(|((a, b), g)| format!("({a}, {b}) gap {g:.2e}"))
            .collect();
        out.push(check(
            study,
            "both plastic domains reach the same optimal value",
            evaluated,
            gaps,
        ));

        match study {
            Study::A => {
                out.push(check(
                    study,
                    "optimum is (F, R) = (0.75, 3.333) or (1, 2)",
                    evaluated,
                    failing(&|c| matches!(c.label.as_str(), "red" | "blue" | "degenerate")),
                ));
                let fit = detect_threshold(report, "red", "blue");
                out.push(check(
                    study,
                    "the two optima are separated by a line",
                    evaluated,
                    match fit {
                        Ok(f) if f.separable => vec![],
                        Ok(_) => vec!["classes overlap".into()],
                        Err(e) => vec![e.to_string()],
                    },
                ));
            }
            Study::B => {
                out.push(check(
                    study,
                    "bridge spring unused (c3 = 0)",
                    evaluated,
                    failing(&|c| c.result.c_star.spring(3) <= DESIGN_TOL),
                ));
                out.push(check(
                    study,
                    "optimum c = (0.5, 0.5, 0, 0.5, 0.5) with (F, G) = (1, 0.5)",
                    evaluated,
                    failing(&|c| {
                        c.result
                            .c_star
                            .limits()
                            .iter()
                            .zip(UNIFORM)
                            .all(|(x, u)| near(*x, u, DESIGN_TOL))
                            && near(c.result.force, 1.0, VALUE_TOL)
                            && near(c.result.conductance, 0.5, VALUE_TOL)
                    }),
                ));
            }
            Study::C | Study::D => {
                out.push(check(
                    study,
                    "base cells: C = 1.5 at F = 0.75",
                    evaluated,
                    failing(&|c| {
                        c.label != "base"
                            || (near(c.result.cost, BASE_COST, VALUE_TOL)
                                && near(c.result.force, FORCE_FLOOR, VALUE_TOL))
                    }),
                ));
                out.push(check(
                    study,
                    "elevated cells: weighted functional constraint is active",
                    evaluated,
                    failing(&|c| {
                        c.label != "elevated"
                            || near(
                                study.functional(c.k1, c.k2, c.domain, c.result.c_star.limits()),
                                FUNCTIONAL_FLOOR,
                                VALUE_TOL,
                            )
                    }),
                ));
                let split = match detect_threshold(report, "base", "elevated") {
                    Ok(f) if f.separable => vec![],
                    Ok(_) => vec!["classes overlap".into()],
                    Err(e) => vec![e.to_string()],
                };
                out.push(check(
                    study,
                    "a line splits base from elevated cells",
                    evaluated,
                    split,
                ));
                if study == Study::C {
                    let elevated: Vec<String> = cells
                        .iter()
                        .filter(|c| c.label == "elevated")
                        .map(describe)
                        .collect();
                    out.push(Check {
                        study,
                        clause: "exceptions with C > 1.5".into(),
                        status: if evaluated {
                            CheckStatus::Pass
                        } else {
                            CheckStatus::NotEvaluated
                        },
                        detail: elevated.join("; "),
                    });
                } else {
                    out.push(check(
                        study,
                        "base cells: G = 0.375",
                        evaluated,
                        failing(&|c| c.label != "base" || near(c.result.conductance, 0.375, VALUE_TOL)),
                    ));
                    out.push(check(
                        study,
                        "elevated cells: c3 = 0, c1 = c4, c2 = c5",
                        evaluated,
                        failing(&|c| {
                            let s = &c.result.c_star;
                            c.label != "elevated"
                                || (s.spring(3) <= DESIGN_TOL
                                    && (s.spring(1) - s.spring(4)).abs() <= CLUSTER_TOL
                                    && (s.spring(2) - s.spring(5)).abs() <= CLUSTER_TOL)
                        }),
                    ));
                }
            }
        }
    }
    out
}

/// One flattened row of a sweep, as written to JSON and CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub study: Study,
    pub k1: f64,
    pub k2: f64,
    pub domain: PlasticDomain,
    pub c: [f64; SPRINGS],
    #[serde(rename = "F")]
    pub force: f64,
    #[serde(rename = "R", with = "crate::report::extended_real")]
    pub resistance: f64,
    #[serde(rename = "G")]
    pub conductance: f64,
    #[serde(rename = "C")]
    pub cost: f64,
    pub value: f64,
    pub label: String,
    pub cluster: usize,
}

impl SweepReport {
    pub fn rows(&self) -> Vec<SweepRow> {
        self.cells
            .iter()
            .map(|cell| SweepRow {
                study: self.spec.study,
                k1: cell.k1,
                k2: cell.k2,
                domain: cell.domain,
                c: *cell.result.c_star.limits(),
                force: cell.result.force,
                resistance: cell.result.resistance,
                conductance: cell.result.conductance,
                cost: cell.result.cost,
                value: cell.result.value,
                label: cell.label.clone(),
                cluster: cell.cluster,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimize::Method;
    use crate::SpringSet;

    #[test]
    fn axis_values() {
        let a: AxisRange = "0.1:1.0:0.1".parse().unwrap();
        let v = a.values();
        assert_eq!(v.len(), 10);
        assert_eq!(v[2], 0.3);
        assert_eq!(v[9], 1.0);
        assert_eq!(Grid::fine().k1.values().len(), 16);
        assert_eq!(Grid::fine().k2.values().len(), 6);
        assert!("0.1:1.0".parse::<AxisRange>().is_err());
        assert!("0.1:1.0:0".parse::<AxisRange>().is_err());
        assert!("1.0:0.1:0.1".parse::<AxisRange>().is_err());
        let g: Grid = "0.1:0.2:0.1,0.5:0.5:0.1".parse().unwrap();
        assert_eq!(g.points(), vec![(0.1, 0.5), (0.2, 0.5)]);
    }

    #[test]
    fn seeds_depend_on_every_part() {
        let base = cell_seed(7, 3, PlasticDomain::D135, 0);
        assert_eq!(base, cell_seed(7, 3, PlasticDomain::D135, 0));
        assert_ne!(base, cell_seed(8, 3, PlasticDomain::D135, 0));
        assert_ne!(base, cell_seed(7, 4, PlasticDomain::D135, 0));
        assert_ne!(base, cell_seed(7, 3, PlasticDomain::D234, 0));
        assert_ne!(base, cell_seed(7, 3, PlasticDomain::D135, 1));
    }

    #[test]
    fn reference_designs_score_as_expected() {
        let red = [0.0, 0.75, 0.5, 0.5, 0.25];
        let blue = UNIFORM;
        let d = PlasticDomain::D135;
        let v = |c: &Point| Study::A.functional(1.0, 1.0, d, c);
        assert!((v(&red) - (0.75 + 10.0 / 3.0)).abs() < 1e-12);
        assert!((v(&blue) - 3.0).abs() < 1e-12);
        // Both sit exactly on the constraint boundary of study A.
        for c in [red, blue] {
            let s = Study::A.problem(1.0, 1.0, d).score(&c);
            assert_eq!(s.max_violation, 0.0);
        }
    }

    #[test]
    fn cheaper_design_than_the_uniform_one_at_low_force_weight() {
        // At (0.22, 0.1) the uniform design (0.88, 0.88, 0, 0.88, 0.88) costs
        // 3.52, yet a bridge design meets every constraint for about 2.01.
        let p = Study::C.problem(0.22, 0.1, PlasticDomain::D135);
        let uniform = [0.88, 0.88, 0.0, 0.88, 0.88];
        let bridged = [0.0, 0.75, 0.5083, 0.5083, 0.2417];
        let su = p.score(&uniform);
        let sb = p.score(&bridged);
        assert!(su.max_violation <= 1e-6 && sb.max_violation <= 1e-6);
        assert!((su.value - 3.52).abs() < 1e-9);
        assert!(sb.value < 2.01);
    }

    #[test]
    fn max_margin_line() {
        let a = [[0.0, 0.0], [1.0, 0.0]];
        let b = [[0.0, 1.0], [1.0, 1.0]];
        let fit = fit_max_margin(&a, &b).unwrap();
        assert!(fit.separable);
        assert!(fit.slope.abs() < 1e-12 && (fit.intercept - 0.5).abs() < 1e-12);
        assert!((fit.margin - 0.5).abs() < 1e-12);

        let fit = fit_max_margin(&[[0.0, 0.0], [0.0, 1.0]], &[[1.0, 0.5]]).unwrap();
        assert!(fit.separable && fit.slope.is_infinite());
        assert!((fit.intercept - 0.5).abs() < 1e-12);

        // Crossing diagonals cannot be split.
        let fit = fit_max_margin(&[[0.0, 0.0], [1.0, 1.0]], &[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        assert!(!fit.separable);
        assert_eq!(fit.margin, 0.0);

        assert!(matches!(fit_max_margin(&a, &[]), Err(Error::NeedTwoClasses(_))));
    }

    #[test]
    fn max_margin_on_the_tie_line_grid() {
        // Weight pairs on the coarse grid, split by k2 = 0.1875 k1.
        let pts = Grid::coarse().points();
        let (above, below): (Vec<(f64, f64)>, Vec<(f64, f64)>) =
            pts.into_iter().partition(|(k1, k2)| 0.1875 * k1 < *k2);
        let a: Vec<P2> = above.iter().map(|p| [p.0, p.1]).collect();
        let b: Vec<P2> = below.iter().map(|p| [p.0, p.1]).collect();
        let fit = fit_max_margin(&a, &b).unwrap();
        assert!(fit.separable);
        for k1 in [0.1, 0.5, 1.0] {
            assert!((fit.k2_at(k1) - 0.1875 * k1).abs() <= 0.1);
        }
    }

    fn cell(k1: f64, k2: f64, c: [f64; 5], force: f64, resistance: f64, cost: f64) -> SweepCell {
        SweepCell {
            k1,
            k2,
            domain: PlasticDomain::D135,
            result: OptResult {
                c_star: SpringSet::new(c).unwrap(),
                value: 0.0,
                force,
                resistance,
                conductance: 1.0 / resistance,
                cost,
                feasible: true,
                max_violation: 0.0,
                sense: Sense::Maximize,
                domain: PlasticDomain::D135,
                method: Method::DifferentialEvolution,
                seed: 0,
                iterations: 0,
            },
            flagged: false,
            label: String::new(),
            cluster: 0,
        }
    }

    fn report(study: Study, cells: Vec<SweepCell>) -> SweepReport {
        SweepReport {
            spec: StudySpec::new(study),
            master_seed: 0,
            cells,
        }
    }

    #[test]
    fn labels_and_clusters() {
        let red = [0.0, 0.75, 0.5, 0.5, 0.25];
        let mut r = report(
            Study::A,
            vec![
                cell(1.0, 1.0, red, 0.7501, 3.3329, 2.0),
                cell(1.0, 0.1, UNIFORM, 0.9998, 2.001, 2.0),
                cell(0.8, 0.15, UNIFORM, 1.0, 2.0, 2.0),
                cell(0.9, 0.9, [0.01, 0.75, 0.5, 0.5, 0.25], 0.75, 3.33, 2.0),
            ],
        );
        classify_cells(&mut r, 0.02);
        let labels: Vec<&str> = r.cells.iter().map(|c| c.label.as_str()).collect();
        assert_eq!(labels, ["red", "blue", "degenerate", "red"]);
        let clusters: Vec<usize> = r.cells.iter().map(|c| c.cluster).collect();
        assert_eq!(clusters, [0, 1, 1, 0]);

        let mut r = report(Study::C, vec![cell(0.5, 0.5, UNIFORM, 0.75, 2.67, 1.505)]);
        classify_cells(&mut r, 0.02);
        assert_eq!(r.cells[0].label, "base");
        r.cells[0].result.cost = 1.6;
        classify_cells(&mut r, 0.02);
        assert_eq!(r.cells[0].label, "elevated");
    }

    #[test]
    fn empty_reports_are_not_evaluated() {
        let reports: Vec<SweepReport> = Study::ALL.iter().map(|&s| report(s, vec![])).collect();
        let checks = verify_propositions(&reports);
        assert!(!checks.is_empty());
        assert!(checks.iter().all(|c| c.status == CheckStatus::NotEvaluated));
    }

    #[test]
    fn small_sweep_is_reproducible() {
        let spec = StudySpec::new(Study::B).with_grid("0.5:0.6:0.1".parse().unwrap());
        let cfg = SweepConfig::default();
        let a = run_study(&spec, &cfg, 11).unwrap();
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap()
            .install(|| run_study(&spec, &cfg, 11))
            .unwrap();
        assert_eq!(a, b);
        assert_eq!(a.cells.len(), 8);
        for c in &a.cells {
            assert_eq!(c.label, "uniform", "{c:?}");
            assert!(c.result.max_violation <= 1e-6);
        }
        let rows = a.rows();
        assert_eq!(rows.len(), 8);
        assert_eq!(rows[0].study, Study::B);
    }
}

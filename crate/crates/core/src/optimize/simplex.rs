//! Dense two-phase simplex with Bland's anti-cycling rule.
//!
//! Variables are implicitly nonnegative. Intended for the handful of tiny
//! linear programs in this crate, not for sparse or large models.

use serde::{Deserialize, Serialize};

use super::Sense;
use crate::error::{Error, Result};

const EPS: f64 = 1e-11;
const MAX_PIVOTS: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub value: f64,
    pub vertex: Vec<f64>,
}

/// `optimize objective · x` subject to `rows` and `x >= 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub sense: Sense,
    pub rows: Vec<Row>,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>, sense: Sense) -> Self {
        Self {
            objective,
            sense,
            rows: Vec::new(),
        }
    }

    pub fn with_row(mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) -> Self {
        self.rows.push(Row {
            coeffs,
            relation,
            rhs,
        });
        self
    }

    pub fn solve(&self) -> Result<LpSolution> {
        let n = self.objective.len();
        for row in &self.rows {
            if row.coeffs.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "row has {} coefficients, objective has {n}",
                    row.coeffs.len()
                )));
            }
        }
        Tableau::build(self).run(self)
    }
}

/// Solves `optimize objective · x` subject to `row · x <= bound` and `x >= 0`.
pub fn simplex_lp(
    objective: &[f64],
    constraints: &[(Vec<f64>, f64)],
    sense: Sense,
) -> Result<LpSolution> {
    let lp = constraints.iter().fold(
        LinearProgram::new(objective.to_vec(), sense),
        |lp, (row, bound)| lp.with_row(row.clone(), Relation::Le, *bound),
    );
    lp.solve()
}

struct Tableau {
    /// `rows x (cols + 1)`, last column is the right-hand side.
    cells: Vec<Vec<f64>>,
    basis: Vec<usize>,
    structural: usize,
    /// Columns at or beyond this index are artificial.
    first_artificial: usize,
    pivots: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.objective.len();
        let normalized: Vec<(Vec<f64>, Relation, f64)> = lp
            .rows
            .iter()
            .map(|r| {
                if r.rhs < 0.0 {
                    let flipped = match r.relation {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    };
                    (r.coeffs.iter().map(|a| -a).collect(), flipped, -r.rhs)
                } else {
                    (r.coeffs.clone(), r.relation, r.rhs)
                }
            })
            .collect();

        let slack_count = normalized
            .iter()
            .filter(|(_, rel, _)| *rel != Relation::Eq)
            .count();
        let artificial_count = normalized
            .iter()
            .filter(|(_, rel, _)| *rel != Relation::Le)
            .count();
        let first_artificial = n + slack_count;
        let width = first_artificial + artificial_count + 1;

        let mut cells = Vec::with_capacity(normalized.len());
        let mut basis = Vec::with_capacity(normalized.len());
        let (mut next_slack, mut next_artificial) = (n, first_artificial);
        for (coeffs, relation, rhs) in normalized {
            let mut row = vec![0.0; width];
            row[..n].copy_from_slice(&coeffs);
            row[width - 1] = rhs;
            match relation {
                Relation::Le => {
                    row[next_slack] = 1.0;
                    basis.push(next_slack);
                    next_slack += 1;
                }
                Relation::Ge => {
                    row[next_slack] = -1.0;
                    next_slack += 1;
                    row[next_artificial] = 1.0;
                    basis.push(next_artificial);
                    next_artificial += 1;
                }
                Relation::Eq => {
                    row[next_artificial] = 1.0;
                    basis.push(next_artificial);
                    next_artificial += 1;
                }
            }
            cells.push(row);
        }
        Self {
            cells,
            basis,
            structural: n,
            first_artificial,
            pivots: 0,
        }
    }

    fn width(&self) -> usize {
        self.first_artificial + self.artificial_count() + 1
    }

    fn artificial_count(&self) -> usize {
        self.cells
            .first()
            .map_or(0, |r| r.len() - 1 - self.first_artificial)
    }

    fn run(mut self, lp: &LinearProgram) -> Result<LpSolution> {
        let width = self.width();
        if self.artificial_count() > 0 {
            let mut phase_one = vec![0.0; width - 1];
            for c in phase_one.iter_mut().skip(self.first_artificial) {
                *c = 1.0;
            }
            let residual = self.optimize(&phase_one, width - 1)?;
            let scale = self
                .cells
                .iter()
                .map(|r| r[width - 1].abs())
                .fold(1.0, f64::max);
            if residual > 1e-9 * scale {
                return Err(Error::Infeasible);
            }
            self.expel_artificials();
        }

        // Phase two minimizes, so a maximization objective is negated.
        let mut costs = vec![0.0; width - 1];
        for (c, &o) in costs.iter_mut().zip(&lp.objective) {
            *c = match lp.sense {
                Sense::Minimize => o,
                Sense::Maximize => -o,
            };
        }
        self.optimize(&costs, self.first_artificial)?;

        let mut vertex = vec![0.0; self.structural];
        for (row, &b) in self.cells.iter().zip(&self.basis) {
            if b < self.structural {
                vertex[b] = row[width - 1].max(0.0);
            }
        }
        let value = lp.objective.iter().zip(&vertex).map(|(c, x)| c * x).sum();
        Ok(LpSolution { value, vertex })
    }

    /// Minimizes `costs · x` over the current basis using only columns below
    /// `usable`. Returns the optimal objective value.
    fn optimize(&mut self, costs: &[f64], usable: usize) -> Result<f64> {
        let width = self.width();
        let rhs = width - 1;
        loop {
            // Reduced costs of the current basis.
            let mut reduced = costs.to_vec();
            let mut value = 0.0;
            for (row, &b) in self.cells.iter().zip(&self.basis) {
                let cb = costs[b];
                if cb != 0.0 {
                    for (r, a) in reduced.iter_mut().zip(row) {
                        *r -= cb * a;
                    }
                    value += cb * row[rhs];
                }
            }
            let Some(entering) = (0..usable).find(|&j| reduced[j] < -EPS) else {
                return Ok(value);
            };

            let mut leaving: Option<(usize, f64)> = None;
            for (i, row) in self.cells.iter().enumerate() {
                let a = row[entering];
                if a > EPS {
                    let ratio = row[rhs] / a;
                    leaving = match leaving {
                        None => Some((i, ratio)),
                        Some((k, best)) => {
                            if ratio < best - EPS
                                || (ratio <= best + EPS && self.basis[i] < self.basis[k])
                            {
                                Some((i, ratio))
                            } else {
                                Some((k, best))
                            }
                        }
                    };
                }
            }
            let Some((pivot_row, _)) = leaving else {
                return Err(Error::Unbounded);
            };
            self.pivot(pivot_row, entering)?;
        }
    }

    fn pivot(&mut self, row: usize, col: usize) -> Result<()> {
        self.pivots += 1;
        if self.pivots > MAX_PIVOTS {
            return Err(Error::PivotLimit(MAX_PIVOTS));
        }
        let p = self.cells[row][col];
        for v in self.cells[row].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.cells[row].clone();
        for (i, r) in self.cells.iter_mut().enumerate() {
            if i == row {
                continue;
            }
            let factor = r[col];
            if factor != 0.0 {
                for (v, pv) in r.iter_mut().zip(&pivot_row) {
                    *v -= factor * pv;
                }
                r[col] = 0.0;
            }
        }
        self.basis[row] = col;
        Ok(())
    }

    /// After a successful phase one, pivots zero-level artificials out of the
    /// basis and drops rows that turn out to be redundant.
    fn expel_artificials(&mut self) {
        let mut i = 0;
        while i < self.cells.len() {
            if self.basis[i] >= self.first_artificial {
                let col = (0..self.first_artificial).find(|&j| self.cells[i][j].abs() > EPS);
                match col {
                    Some(j) => {
                        // Cannot exceed the pivot limit here in practice.
                        let _ = self.pivot(i, j);
                        i += 1;
                    }
                    None => {
                        self.cells.remove(i);
                        self.basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
    }
}

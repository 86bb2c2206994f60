//! Equivalent resistance of the five-spring bridge.
//!
//! Node 1 is the positive terminal and node 4 the grounded one. Springs join
//! nodes as follows: 1 = (1,2), 2 = (1,3), 3 = (2,3) (the bridge), 4 = (2,4),
//! 5 = (3,4). Spring `i` carries conductance `c_i`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of springs in the bridge.
pub const SPRINGS: usize = 5;

/// Elastic limits `(c1, ..., c5)` of the five springs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; SPRINGS]", into = "[f64; SPRINGS]")]
pub struct SpringSet([f64; SPRINGS]);

impl SpringSet {
    pub fn new(limits: [f64; SPRINGS]) -> Result<Self> {
        for (index, &value) in limits.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite { index: index + 1 });
            }
            if value < 0.0 {
                return Err(Error::NegativeComponent {
                    index: index + 1,
                    value,
                });
            }
        }
        Ok(Self(limits))
    }

    pub fn zeros() -> Self {
        Self([0.0; SPRINGS])
    }

    pub fn limits(&self) -> &[f64; SPRINGS] {
        &self.0
    }

    /// Elastic limit of spring `i`, counting from 1.
    pub fn spring(&self, i: usize) -> f64 {
        self.0[i - 1]
    }

    /// Fabrication cost `c1 + ... + c5`.
    pub fn cost(&self) -> f64 {
        self.0.iter().sum()
    }
}

impl TryFrom<[f64; SPRINGS]> for SpringSet {
    type Error = Error;

    fn try_from(limits: [f64; SPRINGS]) -> Result<Self> {
        Self::new(limits)
    }
}

impl From<SpringSet> for [f64; SPRINGS] {
    fn from(c: SpringSet) -> Self {
        c.0
    }
}

impl FromStr for SpringSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parsed: Vec<f64> = s
            .split(',')
            .map(|part| {
                part.trim().parse::<f64>().map_err(|e| {
                    Error::InvalidConfig(format!("bad elastic limit {part:?}: {e}"))
                })
            })
            .collect::<Result<_>>()?;
        let limits: [f64; SPRINGS] = parsed.try_into().map_err(|v: Vec<f64>| {
            Error::DimensionMismatch(format!("expected {SPRINGS} limits, got {}", v.len()))
        })?;
        Self::new(limits)
    }
}

impl fmt::Display for SpringSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [c1, c2, c3, c4, c5] = self.0;
        write!(f, "({c1}, {c2}, {c3}, {c4}, {c5})")
    }
}

/// Numerator and denominator of the bridge resistance after substituting
/// `R_i = 1/c_i` into the node-potential result and clearing denominators.
pub(crate) fn resistance_parts(c: &[f64; SPRINGS]) -> (f64, f64) {
    let [c1, c2, c3, c4, c5] = *c;
    let num = c3 * c4 + c2 * (c3 + c4) + c3 * c5 + c4 * c5 + c1 * (c2 + c3 + c5);
    let den = c1 * c4 * c5
        + c2 * c4 * c5
        + c1 * c2 * (c4 + c5)
        + c2 * c3 * (c4 + c5)
        + c1 * c3 * (c4 + c5);
    (num, den)
}

/// Resistance for limits already known to be nonnegative. `+inf` when the
/// terminals are disconnected.
pub(crate) fn resistance_unchecked(c: &[f64; SPRINGS]) -> f64 {
    let (num, den) = resistance_parts(c);
    if den > 0.0 {
        num / den
    } else if num > 0.0 {
        f64::INFINITY
    } else {
        degenerate_resistance(c)
    }
}

pub(crate) fn conductance_unchecked(c: &[f64; SPRINGS]) -> f64 {
    let (num, den) = resistance_parts(c);
    if den > 0.0 {
        den / num
    } else if num > 0.0 {
        0.0
    } else {
        let r = degenerate_resistance(c);
        if r.is_infinite() {
            0.0
        } else {
            1.0 / r
        }
    }
}

/// Both cleared polynomials vanish when at most one conducting path is left
/// (e.g. only springs 1 and 4), so the closed form reads 0/0. Those designs
/// go through the junction law at the two inner nodes instead, with the
/// source at potential 1.
fn degenerate_resistance(c: &[f64; SPRINGS]) -> f64 {
    let [c1, c2, c3, c4, c5] = *c;
    let a = c1 + c3 + c4;
    let b = c2 + c3 + c5;
    let det = a * b - c3 * c3;
    let current = if det > 0.0 {
        let v2 = (c1 * b + c3 * c2) / det;
        let v3 = (a * c2 + c3 * c1) / det;
        c1 * (1.0 - v2) + c2 * (1.0 - v3)
    } else if a == 0.0 && b > 0.0 {
        c2 * c5 / b
    } else if b == 0.0 && a > 0.0 {
        c1 * c4 / a
    } else {
        0.0
    };
    if current > 0.0 {
        1.0 / current
    } else {
        f64::INFINITY
    }
}

/// Equivalent resistance between the terminals, `+inf` when disconnected.
///
/// Evaluated from the cleared closed form, which needs no division by an
/// individual `c_i`.
pub fn resistance(c: &SpringSet) -> f64 {
    resistance_unchecked(&c.0)
}

/// Equivalent conductance, zero when the terminals are disconnected.
pub fn conductance(c: &SpringSet) -> f64 {
    conductance_unchecked(&c.0)
}

/// The closed form as it is commonly printed, without the `c1 c3 (c4 + c5)`
/// denominator term. Kept only to flag where it disagrees with [`resistance`].
pub fn resistance_printed(c: &SpringSet) -> f64 {
    let [c1, c2, c3, c4, c5] = c.0;
    let (num, _) = resistance_parts(&c.0);
    let den = c1 * c4 * c5 + c2 * c4 * c5 + c1 * c2 * (c4 + c5) + c2 * c3 * (c4 + c5);
    if den > 0.0 {
        num / den
    } else {
        f64::INFINITY
    }
}

/// True when the printed closed form differs from [`resistance`] by more than
/// `rel_tol` relative. The two agree whenever `c1 * c3 = 0`.
pub fn printed_form_disagrees(c: &SpringSet, rel_tol: f64) -> bool {
    let exact = resistance(c);
    let printed = resistance_printed(c);
    if exact.is_infinite() || printed.is_infinite() {
        return exact.is_infinite() != printed.is_infinite();
    }
    (exact - printed).abs() > rel_tol * exact.abs().max(f64::MIN_POSITIVE)
}

/// One resistor between two nodes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub conductance: f64,
}

/// A resistor network with a designated source and sink.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResistorNetwork {
    node_count: usize,
    edges: Vec<Edge>,
    source: usize,
    sink: usize,
}

impl ResistorNetwork {
    pub fn new(node_count: usize, edges: Vec<Edge>, source: usize, sink: usize) -> Result<Self> {
        if source >= node_count || sink >= node_count {
            return Err(Error::InvalidNetwork(format!(
                "terminal out of range for {node_count} nodes"
            )));
        }
        if source == sink {
            return Err(Error::InvalidNetwork("source equals sink".into()));
        }
        for e in &edges {
            if e.a >= node_count || e.b >= node_count {
                return Err(Error::InvalidNetwork(format!(
                    "edge ({}, {}) references a missing node",
                    e.a, e.b
                )));
            }
            if !e.conductance.is_finite() || e.conductance < 0.0 {
                return Err(Error::InvalidNetwork(format!(
                    "edge ({}, {}) has conductance {}",
                    e.a, e.b, e.conductance
                )));
            }
        }
        Ok(Self {
            node_count,
            edges,
            source,
            sink,
        })
    }

    /// The four-node bridge with spring conductances taken from `c`.
    pub fn bridge(c: &SpringSet) -> Self {
        const ENDS: [(usize, usize); SPRINGS] = [(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)];
        let edges = ENDS
            .iter()
            .zip(c.limits())
            .map(|(&(a, b), &g)| Edge {
                a,
                b,
                conductance: g,
            })
            .collect();
        Self {
            node_count: 4,
            edges,
            source: 0,
            sink: 3,
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }
}

/// Equivalent resistance from a junction-law solve.
///
/// The sink is grounded, the source held at unit potential, and Kirchhoff's
/// current law is imposed at every other node reachable from the source
/// through edges of positive conductance. Nodes outside that component float
/// and are dropped. Returns `+inf` when the sink is unreachable.
pub fn solve_network(net: &ResistorNetwork) -> Result<f64> {
    let n = net.node_count;
    let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for e in net.edges.iter().filter(|e| e.conductance > 0.0 && e.a != e.b) {
        adjacency[e.a].push((e.b, e.conductance));
        adjacency[e.b].push((e.a, e.conductance));
    }

    let mut reached = vec![false; n];
    let mut stack = vec![net.source];
    reached[net.source] = true;
    while let Some(u) = stack.pop() {
        for &(v, _) in &adjacency[u] {
            if !reached[v] {
                reached[v] = true;
                stack.push(v);
            }
        }
    }
    if !reached[net.sink] {
        return Ok(f64::INFINITY);
    }

    // Unknown potentials: reachable interior nodes.
    let mut slot = vec![usize::MAX; n];
    let mut interior = Vec::new();
    for v in 0..n {
        if reached[v] && v != net.source && v != net.sink {
            slot[v] = interior.len();
            interior.push(v);
        }
    }
    let m = interior.len();
    let mut lap = vec![vec![0.0; m]; m];
    let mut rhs = vec![0.0; m];
    for (row, &v) in interior.iter().enumerate() {
        for &(w, g) in &adjacency[v] {
            lap[row][row] += g;
            if w == net.source {
                rhs[row] += g;
            } else if w != net.sink {
                lap[row][slot[w]] -= g;
            }
        }
    }
    let potentials = gaussian_solve(lap, rhs)?;

    let potential = |v: usize| {
        if v == net.source {
            1.0
        } else if v == net.sink {
            0.0
        } else {
            potentials[slot[v]]
        }
    };
    let current: f64 = adjacency[net.source]
        .iter()
        .map(|&(w, g)| g * (1.0 - potential(w)))
        .sum();
    if current > 0.0 && current.is_finite() {
        Ok(1.0 / current)
    } else {
        Err(Error::SingularSystem)
    }
}

fn gaussian_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    let scale = a
        .iter()
        .flatten()
        .fold(0.0_f64, |acc, x| acc.max(x.abs()))
        .max(f64::MIN_POSITIVE);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("non-empty pivot range");
        if a[pivot][col].abs() <= 1e-14 * scale {
            return Err(Error::SingularSystem);
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor != 0.0 {
                for k in col..n {
                    a[row][k] -= factor * a[col][k];
                }
                b[row] -= factor * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Ok(x)
}

//! Which signed sets of springs can carry the terminal load.
//!
//! A set `I0` of signed spring indices is admissible when the loading
//! direction lies in the cone spanned by `alpha * M e_j` for `(alpha, j)` in
//! `I0`, and irreducible when no proper subset is admissible.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::optimize::simplex::{LinearProgram, Relation};
use crate::optimize::Sense;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Minus,
    Plus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// `(alpha, j)`: spring `j` (from 1) taken with sign `alpha`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SignedIndex {
    pub sign: Sign,
    pub spring: usize,
}

impl SignedIndex {
    pub fn plus(spring: usize) -> Self {
        Self {
            sign: Sign::Plus,
            spring,
        }
    }

    pub fn minus(spring: usize) -> Self {
        Self {
            sign: Sign::Minus,
            spring,
        }
    }
}

impl Ord for SignedIndex {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.spring, std::cmp::Reverse(self.sign)).cmp(&(other.spring, std::cmp::Reverse(other.sign)))
    }
}

impl PartialOrd for SignedIndex {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for SignedIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.sign {
            Sign::Plus => '+',
            Sign::Minus => '-',
        };
        write!(f, "{s}{}", self.spring)
    }
}

impl FromStr for SignedIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("bad signed index {s:?}"));
        let (sign, rest) = match s.chars().next() {
            Some('+') => (Sign::Plus, &s[1..]),
            Some('-') => (Sign::Minus, &s[1..]),
            _ => return Err(bad()),
        };
        let spring = rest.parse::<usize>().map_err(|_| bad())?;
        if spring == 0 {
            return Err(bad());
        }
        Ok(Self { sign, spring })
    }
}

impl Serialize for SignedIndex {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SignedIndex {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Stacked loading/orthogonal-complement matrix and the loading direction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityProblem {
    pub matrix: Vec<Vec<f64>>,
    #[serde(default)]
    pub target: Option<Vec<f64>>,
}

impl AdmissibilityProblem {
    /// Target defaults to the first unit vector.
    pub fn new(matrix: Vec<Vec<f64>>) -> Result<Self> {
        let p = Self {
            matrix,
            target: None,
        };
        p.validate()?;
        Ok(p)
    }

    /// The five-spring bridge.
    pub fn benchmark() -> Self {
        Self {
            matrix: vec![
                vec![1.0, 0.0, 1.0, 0.0, 1.0],
                vec![0.0, 0.0, 1.0, -1.0, 1.0],
                vec![1.0, -1.0, 1.0, 0.0, 0.0],
            ],
            target: None,
        }
    }

    pub fn rows(&self) -> usize {
        self.matrix.len()
    }

    pub fn springs(&self) -> usize {
        self.matrix.first().map_or(0, Vec::len)
    }

    pub fn target(&self) -> Vec<f64> {
        self.target.clone().unwrap_or_else(|| {
            let mut t = vec![0.0; self.rows()];
            if let Some(first) = t.first_mut() {
                *first = 1.0;
            }
            t
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.matrix.is_empty() || self.springs() == 0 {
            return Err(Error::DimensionMismatch("matrix is empty".into()));
        }
        if self.matrix.iter().any(|r| r.len() != self.springs()) {
            return Err(Error::DimensionMismatch("matrix rows differ in length".into()));
        }
        if let Some(t) = &self.target {
            if t.len() != self.rows() {
                return Err(Error::DimensionMismatch(format!(
                    "target has {} entries, matrix has {} rows",
                    t.len(),
                    self.rows()
                )));
            }
        }
        Ok(())
    }

    /// `alpha * M e_j`.
    pub fn generator(&self, index: SignedIndex) -> Vec<f64> {
        self.matrix
            .iter()
            .map(|row| index.sign.factor() * row[index.spring - 1])
            .collect()
    }

    pub fn is_admissible(&self, set: &[SignedIndex]) -> Result<bool> {
        let generators: Vec<Vec<f64>> = set.iter().map(|&i| self.generator(i)).collect();
        cone_member(&self.target(), &generators)
    }
}

/// Whether `target = sum_k lambda_k g_k` for some `lambda >= 0`, decided by a
/// phase-one simplex.
pub fn cone_member(target: &[f64], generators: &[Vec<f64>]) -> Result<bool> {
    if let Some(g) = generators.iter().find(|g| g.len() != target.len()) {
        return Err(Error::DimensionMismatch(format!(
            "generator has {} entries, target has {}",
            g.len(),
            target.len()
        )));
    }
    if generators.is_empty() {
        return Ok(target.iter().all(|t| t.abs() <= 1e-9));
    }
    let lp = target.iter().enumerate().fold(
        LinearProgram::new(vec![0.0; generators.len()], Sense::Minimize),
        |lp, (d, &t)| {
            let row = generators.iter().map(|g| g[d]).collect();
            lp.with_row(row, Relation::Eq, t)
        },
    );
    match lp.solve() {
        Ok(_) => Ok(true),
        Err(Error::Infeasible) => Ok(false),
        Err(e) => Err(e),
    }
}

/// All irreducible admissible sets, sorted by size and then lexicographically.
///
/// Sets grow by cardinality and any superset of an admissible set is
/// skipped, so every admissible set reached is irreducible. The generators
/// of an irreducible set are linearly independent, which bounds the search
/// at the target dimension.
pub fn enumerate_irreducible(problem: &AdmissibilityProblem) -> Result<Vec<Vec<SignedIndex>>> {
    problem.validate()?;
    let candidates: Vec<SignedIndex> = (1..=problem.springs())
        .flat_map(|j| [SignedIndex::plus(j), SignedIndex::minus(j)])
        .collect();
    let max_size = problem.rows().min(candidates.len());

    let mut found: Vec<u64> = Vec::new();
    let target_is_zero = problem.target().iter().all(|t| t.abs() <= 1e-9);
    if target_is_zero {
        return Ok(vec![Vec::new()]);
    }
    for size in 1..=max_size {
        for mask in subsets_of_size(candidates.len(), size) {
            if found.iter().any(|&f| f & mask == f) {
                continue;
            }
            let set = members(&candidates, mask);
            if problem.is_admissible(&set)? {
                found.push(mask);
            }
        }
    }
    let mut sets: Vec<Vec<SignedIndex>> = found.iter().map(|&m| members(&candidates, m)).collect();
    for s in &mut sets {
        s.sort();
    }
    sets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    Ok(sets)
}

fn members(candidates: &[SignedIndex], mask: u64) -> Vec<SignedIndex> {
    candidates
        .iter()
        .enumerate()
        .filter(|(i, _)| mask & (1 << i) != 0)
        .map(|(_, &c)| c)
        .collect()
}

/// Bit masks over `n` items with exactly `k` bits set, in increasing order.
fn subsets_of_size(n: usize, k: usize) -> impl Iterator<Item = u64> {
    (0u64..(1u64 << n)).filter(move |m| m.count_ones() as usize == k)
}

//! Terminal response force and the feasibility domains it is valid on.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::circuit::{conductance_unchecked, resistance_unchecked, SpringSet, SPRINGS};
use crate::error::{Error, Result};

/// Closed feasibility tolerance used unless a caller asks otherwise.
pub const DEFAULT_BOUNDARY_TOL: f64 = 1e-9;

/// Which three springs reach plastic mode terminally.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlasticDomain {
    /// Springs 1, 3, 5.
    D135,
    /// Springs 2, 3, 4.
    D234,
}

impl PlasticDomain {
    pub const ALL: [PlasticDomain; 2] = [PlasticDomain::D135, PlasticDomain::D234];

    /// Coefficients of the terminal force as a linear form in `c`.
    pub fn force_coefficients(self) -> [f64; SPRINGS] {
        match self {
            PlasticDomain::D135 => [1.0, 0.0, 1.0, 0.0, 1.0],
            PlasticDomain::D234 => [0.0, 1.0, 1.0, 1.0, 0.0],
        }
    }

    /// The other domain, reached through [`mirror`].
    pub fn mirrored(self) -> Self {
        match self {
            PlasticDomain::D135 => PlasticDomain::D234,
            PlasticDomain::D234 => PlasticDomain::D135,
        }
    }

    /// Feasibility as linear rows `row · c <= bound`, one per slack.
    pub fn feasibility_rows(self) -> [([f64; SPRINGS], f64); 4] {
        match self {
            PlasticDomain::D135 => [
                ([0.0, -1.0, -1.0, 0.0, -1.0], 0.0),
                ([0.0, -1.0, 1.0, 0.0, 1.0], 0.0),
                ([-1.0, 0.0, -1.0, -1.0, 0.0], 0.0),
                ([1.0, 0.0, 1.0, -1.0, 0.0], 0.0),
            ],
            PlasticDomain::D234 => [
                ([-1.0, 0.0, -1.0, -1.0, 0.0], 0.0),
                ([-1.0, 0.0, 1.0, 1.0, 0.0], 0.0),
                ([0.0, -1.0, -1.0, 0.0, -1.0], 0.0),
                ([0.0, 1.0, 1.0, 0.0, -1.0], 0.0),
            ],
        }
    }
}

impl fmt::Display for PlasticDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PlasticDomain::D135 => "d135",
            PlasticDomain::D234 => "d234",
        })
    }
}

impl FromStr for PlasticDomain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "d135" | "135" => Ok(PlasticDomain::D135),
            "d234" | "234" => Ok(PlasticDomain::D234),
            other => Err(Error::InvalidConfig(format!("unknown domain {other:?}"))),
        }
    }
}

pub(crate) fn terminal_force_unchecked(c: &[f64; SPRINGS], domain: PlasticDomain) -> f64 {
    match domain {
        PlasticDomain::D135 => c[0] + c[2] + c[4],
        PlasticDomain::D234 => c[1] + c[2] + c[3],
    }
}

/// Terminal response force under the assumption that `domain`'s springs
/// plasticize. Feasibility is not checked here.
pub fn terminal_force(c: &SpringSet, domain: PlasticDomain) -> f64 {
    terminal_force_unchecked(c.limits(), domain)
}

pub(crate) fn slacks_unchecked(c: &[f64; SPRINGS], domain: PlasticDomain) -> [f64; 4] {
    let [c1, c2, c3, c4, c5] = *c;
    match domain {
        PlasticDomain::D135 => [c2 + c3 + c5, c2 - c3 - c5, c4 + c1 + c3, c4 - c1 - c3],
        PlasticDomain::D234 => [c1 + c3 + c4, c1 - c3 - c4, c5 + c2 + c3, c5 - c2 - c3],
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub slacks: [f64; 4],
    pub feasible: bool,
    pub on_boundary: bool,
}

/// Slacks of the two-sided feasibility inequalities, closed at `-tol`.
pub fn feasibility(c: &SpringSet, domain: PlasticDomain, tol: f64) -> FeasibilityReport {
    let slacks = slacks_unchecked(c.limits(), domain);
    FeasibilityReport {
        slacks,
        feasible: slacks.iter().all(|&s| s >= -tol),
        on_boundary: slacks.iter().any(|&s| s.abs() <= tol),
    }
}

/// Swaps the roles of the two plastic domains: `(c2, c1, c3, c5, c4)`.
pub fn mirror(c: &SpringSet) -> SpringSet {
    let [c1, c2, c3, c4, c5] = *c.limits();
    SpringSet::new([c2, c1, c3, c5, c4]).expect("permutation keeps limits valid")
}

/// Exchanges the two terminals: `(c4, c5, c3, c1, c2)`. Resistance is
/// unchanged and each domain maps onto the other.
pub fn reverse_terminals(c: &SpringSet) -> SpringSet {
    let [c1, c2, c3, c4, c5] = *c.limits();
    SpringSet::new([c4, c5, c3, c1, c2]).expect("permutation keeps limits valid")
}

/// Every functional of one design.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    #[serde(rename = "F")]
    pub force: f64,
    #[serde(rename = "R", with = "crate::report::extended_real")]
    pub resistance: f64,
    #[serde(rename = "G")]
    pub conductance: f64,
    #[serde(rename = "C")]
    pub cost: f64,
    pub feasibility: FeasibilityReport,
}

pub fn evaluate_all(c: &SpringSet, domain: PlasticDomain) -> Evaluation {
    let limits = c.limits();
    Evaluation {
        force: terminal_force_unchecked(limits, domain),
        resistance: resistance_unchecked(limits),
        conductance: conductance_unchecked(limits),
        cost: c.cost(),
        feasibility: feasibility(c, domain, DEFAULT_BOUNDARY_TOL),
    }
}

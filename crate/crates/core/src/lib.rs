//! Multi-functional design of a five-spring elastoplastic conducting bridge.
//!
//! Springs sit on the Wheatstone-bridge topology (four nodes, five edges).
//! Spring `i` has elastic limit `c_i` and electrical resistance `1/c_i`, so a
//! single vector of limits fixes the terminal plastic response force, the
//! terminal-to-terminal resistance and conductance, and the fabrication cost.
//!
//! The crate is organised bottom-up:
//!
//! * [`circuit`] closed-form bridge resistance plus a generic node-potential solver.
//! * [`plasticity`] terminal force, feasibility slacks and the mirror map.
//! * [`admissibility`] cone-membership test and irreducible index-set enumeration.
//! * [`optimize`] differential evolution, multi-start pattern search and a dense
//!   simplex solver, with black-box optimizers registered by name.
//! * [`sweep`] weight-grid studies, classification and threshold fitting.
//! * [`report`] CSV, markdown and SVG output.

pub mod admissibility;
pub mod circuit;
pub mod error;
pub mod optimize;
pub mod plasticity;
pub mod report;
pub mod sweep;

pub use circuit::{conductance, resistance, SpringSet};
pub use error::{Error, Result};
pub use plasticity::PlasticDomain;

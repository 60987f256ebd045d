//! Context-aware runtime confidence for safety-critical perception components.
//!
//! The crate turns hazard analysis artifacts and an Operational Design Domain
//! (ODD) description into discrete Bayesian networks, and evaluates those
//! networks against live ODD observations:
//!
//! - [`odd`]: ODD classes, attribute intervals, discretization of readings.
//! - [`hara`]: hazards, causal chains and fault-tree construction.
//! - [`bayes`]: discrete Bayesian networks, variable elimination, CPT fitting.
//! - [`confidence`]: data / model / testing assurance network templates and
//!   the metrics that feed them.
//! - [`ontology`]: a small triple store with closed-world axiom checks for
//!   the ODD, hazard, GSN and network vocabulary.
//! - [`refinement`]: decision-tree learning of ODD boundaries from traces.
//! - [`monitor`]: model bundles, per-tick inference and synthetic traces.

pub mod bayes;
pub mod confidence;
pub mod doc;
pub mod hara;
pub mod monitor;
pub mod odd;
pub mod ontology;
pub mod refinement;

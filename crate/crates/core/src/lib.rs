//! Fair monotone submodular maximization under a matroid constraint, in the
//! streaming model.
//!
//! The crate provides the constraint machinery (matroid independence oracles,
//! per-color fairness bounds), objective oracles with incremental marginal
//! evaluation, exact weighted matroid intersection, the streaming algorithms
//! (two-pass reservoir pipeline, one-pass heuristics, baselines), exact
//! solvers for modular objectives, an exponential-memory search, and a
//! brute-force reference engine for desk-scale validation.
//!
//! All value-carrying APIs are generic over a [`Value`] scalar; `f64` is the
//! default for submodular objectives and `i64` gives exact arithmetic for
//! integer-weighted modular runs.

pub mod brute;
pub mod error;
pub mod exponential;
pub mod intersect;
pub mod matroid;
pub mod model;
pub mod modular;
pub mod objective;
pub mod streaming;
pub mod value;

pub use error::{Error, Result};
pub use matroid::{greedy_basis, verify_matroid_axioms, LaminarFamily, MatroidKind, MatroidOracle};
pub use model::{
    fairness_violation, ColorId, ColorMap, Constraints, ElemSet, Element, ElementId,
    FairnessBounds, Instance, MemoryMeter, OracleCalls, SolutionReport,
};
pub use objective::{
    check_submodular_monotone, GainTracker, ObjectiveKind, ObjectiveOracle, Tracker,
};
pub use value::{approx_eq, approx_ge, Value};

/// Default scalar for submodular objective values.
pub type Score = f64;

/// Scalar for exact integer-weighted modular runs.
pub type ExactWeight = i64;

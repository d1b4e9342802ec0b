//! Loss-tolerant logical Bell measurements on photonic tree graph states.
//!
//! * [`model`] — trees, channel parameters, the two-photon BSM outcome model.
//! * [`analytic`] — exact recursions for the static and dynamic protocols.
//! * [`montecarlo`] — sampling and exhaustive-enumeration oracle.
//! * [`stabilizer`] — Pauli tableau engine, graph states, logical encoding.
//! * [`genseq`] — matter-qubit generation sequence of a logical Bell pair.
//! * [`search`] — branching-vector enumeration and Pareto fronts.

pub mod analytic;
pub mod combinatorics;
pub mod genseq;
pub mod model;
pub mod montecarlo;
pub mod search;
pub mod stabilizer;

pub use model::{
    build_tree, outcome_probability, photon_count, BranchingVector, BsmOutcome, ChannelParams,
    ModelError, OutcomeCounts, Protocol, TreeGraph,
};

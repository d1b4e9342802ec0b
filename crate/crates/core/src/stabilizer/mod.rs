//! Stabilizer-tableau engine: Pauli strings, Clifford updates, Pauli
//! measurements, graph states and the tree code.

mod graph;
mod pauli;
mod tableau;

use thiserror::Error;

pub use graph::{
    encode_logical, graph_state_from_edges, graph_state_tableau, logical_state, tree_code,
    verify_indirect_z, EncodedTree, InputState, TreeCode,
};
pub use pauli::{Pauli, PauliString};
pub use tableau::{
    first_difference, tableau_equal, MeasureMode, MeasurementRecord, OutcomeChoice,
    StabilizerTableau,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StabilizerError {
    #[error("qubit {qubit} out of range for a {n}-qubit register")]
    QubitOutOfRange { qubit: usize, n: usize },
    #[error("qubit {0} has already been measured out")]
    QubitRemoved(usize),
    #[error("qubit {0} is still in use")]
    QubitStillActive(usize),
    #[error("two-qubit gate needs distinct qubits, got {0} twice")]
    SameQubit(usize),
    #[error("tableau sizes differ: {left} vs {right} qubits")]
    QubitCountMismatch { left: usize, right: usize },
    #[error("{basis} on qubit {qubit} is deterministic with outcome {expected:+}, a different outcome was forced")]
    Contradiction { qubit: usize, basis: char, expected: i8 },
    #[error("generators {0} and {1} anticommute")]
    NotCommuting(String, String),
    #[error("dependent generator: {0}")]
    Dependent(String),
    #[error("generator {0} acts outside the kept qubits")]
    NotSeparable(String),
    #[error("invalid logical operator: {0}")]
    InvalidLogical(String),
    #[error("vertex {0} is a leaf; indirect Z needs a child")]
    LeafTarget(usize),
    #[error("{0}")]
    Parse(String),
}

//! Exact statevector simulation of one to four qubits (five with a probe).
//!
//! Constructors for eigenstates, cat states, Bell states and their
//! combinations; projective measurement in the x, y and z bases; and the
//! correlation tables those states imply.

mod build;
mod state;
mod tables;

use thiserror::Error;

pub use build::{ghz, make_cat, make_eigenstate, make_two_qubit, pair_superposition, RelativeSign, TwoQubitLabel};
pub use state::{
    inner_product, measure, outcome_distribution, Amplitude, Basis, Outcome, StateVector, MAX_QUBITS,
    TOLERANCE,
};
pub use tables::{
    derive_bob_outcome, derive_correlation_table, predicted_bob_outcome, Announcement, CorrelationEntry,
    CorrelationTable, TableScenario,
};

#[derive(Debug, Error, PartialEq)]
pub enum QStateError {
    #[error("qubit index {index} out of range for a {num_qubits}-qubit state")]
    QubitOutOfRange { index: usize, num_qubits: usize },
    #[error("dimension mismatch: {left} vs {right} qubits")]
    DimensionMismatch { left: usize, right: usize },
    #[error("unsupported qubit count {0}")]
    InvalidQubitCount(usize),
    #[error("amplitude vector length {0} is not a supported power of two")]
    InvalidLength(usize),
    #[error("state norm is {0}, expected 1")]
    NotNormalized(f64),
    #[error("no qubit held by {0}")]
    MissingHolder(String),
    #[error("amplitude is NaN or infinite")]
    NonFinite,
}

#[cfg(test)]
mod tests;

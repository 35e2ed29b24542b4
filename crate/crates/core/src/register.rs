//! A state vector whose qubits are tagged with the party holding them.

use serde::{Deserialize, Serialize};

use crate::qstate::{make_eigenstate, Basis, Outcome, QStateError, StateVector};

/// Who physically holds a qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Holder {
    Center,
    Alice,
    Bob,
    /// First and second qubit of an eavesdropper's probe.
    Probe0,
    Probe1,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Register {
    state: StateVector,
    holders: Vec<Holder>,
}

impl Register {
    pub fn new(state: StateVector, holders: Vec<Holder>) -> Self {
        assert_eq!(state.num_qubits(), holders.len(), "one holder per qubit");
        Register { state, holders }
    }

    pub fn state(&self) -> &StateVector {
        &self.state
    }

    pub fn holders(&self) -> &[Holder] {
        &self.holders
    }

    pub fn index_of(&self, holder: Holder) -> Option<usize> {
        self.holders.iter().position(|h| *h == holder)
    }

    pub fn holds(&self, holder: Holder) -> bool {
        self.index_of(holder).is_some()
    }

    fn require(&self, holder: Holder) -> Result<usize, QStateError> {
        self.index_of(holder)
            .ok_or_else(|| QStateError::MissingHolder(format!("{holder:?}")))
    }

    pub fn distribution(&self, holder: Holder, basis: Basis) -> Result<(f64, f64), QStateError> {
        self.state.outcome_distribution(self.require(holder)?, basis)
    }

    /// Measures and removes `holder`'s qubit.
    pub fn measure(&mut self, holder: Holder, basis: Basis, draw: f64) -> Result<Outcome, QStateError> {
        let idx = self.require(holder)?;
        let (outcome, rest) = self.state.measure(idx, basis, draw)?;
        self.state = rest;
        self.holders.remove(idx);
        Ok(outcome)
    }

    /// Both measurement branches with their Born weights; zero-weight
    /// branches are omitted.
    pub fn branches(&self, holder: Holder, basis: Basis) -> Result<Vec<(f64, Outcome, Register)>, QStateError> {
        let idx = self.require(holder)?;
        let mut out = Vec::with_capacity(2);
        for sign in Outcome::ALL {
            let (p, rest) = self.state.branch(idx, basis, sign)?;
            if let Some(rest) = rest {
                let mut holders = self.holders.clone();
                holders.remove(idx);
                out.push((p, sign, Register { state: rest, holders }));
            }
        }
        Ok(out)
    }

    /// Replaces `holder`'s qubit by a fresh eigenstate. The qubit must already
    /// have been removed by a measurement; it is re-inserted at `position`.
    pub fn insert(&mut self, position: usize, holder: Holder, basis: Basis, sign: Outcome) -> Result<(), QStateError> {
        let single = make_eigenstate(basis, sign);
        self.state = if self.holders.is_empty() {
            single
        } else {
            self.state.insert_qubit(position, &single)?
        };
        self.holders.insert(position, holder);
        Ok(())
    }

    /// Measures `holder` and resends the matching eigenstate in its place.
    pub fn measure_and_resend(&mut self, holder: Holder, basis: Basis, draw: f64) -> Result<Outcome, QStateError> {
        let idx = self.require(holder)?;
        let outcome = self.measure(holder, basis, draw)?;
        self.insert(idx, holder, basis, outcome)?;
        Ok(outcome)
    }

    pub(crate) fn replace_state(&mut self, state: StateVector, holders: Vec<Holder>) {
        assert_eq!(state.num_qubits(), holders.len());
        self.state = state;
        self.holders = holders;
    }
}

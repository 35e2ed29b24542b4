//! Attacks on the quantum channel or the center, and an exact oracle for
//! the detection statistics they produce.
//!
//! Attacks act as middleware: they see and replace in-flight registers but
//! never the parties' private records. What Eve later infers about a key bit
//! uses only her own observations plus public announcements and bases.

mod ancilla;
mod oracle;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocols::{consistency_map, PositionRecord, ProtocolId, Role};
use crate::qstate::{Announcement, Basis, Outcome, QStateError};
use crate::register::{Holder, Register};
use crate::rng::SimRng;

pub use ancilla::{
    analyze_ancilla, ancilla_attack, ancilla_states, apply_ancilla, eve_projection, helstrom_guess, AncillaReport,
    EQUAL_ALPHA,
};
pub use oracle::{predict, predict_detection_rate, BasisPairPrediction, Prediction};

#[derive(Debug, Error, PartialEq)]
pub enum AdversaryError {
    #[error("{attack} is not supported for {protocol}")]
    Unsupported { attack: String, protocol: ProtocolId },
    #[error("invalid attack parameter: {0}")]
    InvalidParameter(String),
    #[error("projection amplitudes have squared norm {0}, expected 1")]
    UnnormalizedAlpha(f64),
    #[error(transparent)]
    State(#[from] QStateError),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttackModel {
    #[default]
    None,
    /// Eve measures one user's particle in transit and resends the
    /// eigenstate she found.
    InterceptResend { target: Role, basis_pool: Vec<Basis> },
    /// The center measures all three GHZ particles before distribution.
    CheatingCenterMeasureAll { basis: Basis },
    /// Eve couples a two-qubit probe to the users' particles.
    AncillaEntangle { coupling: f64 },
}

impl AttackModel {
    /// Intercept/resend with the protocol's own basis pool.
    pub fn intercept_resend(target: Role, protocol: ProtocolId) -> Self {
        AttackModel::InterceptResend {
            target,
            basis_pool: protocol.user_bases().to_vec(),
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, AttackModel::None)
    }

    /// Short label used in CSV rows.
    pub fn label(&self) -> String {
        match self {
            AttackModel::None => "none".into(),
            AttackModel::InterceptResend { target, basis_pool } => {
                let pool: String = basis_pool.iter().map(|b| b.letter()).collect();
                let who = match target {
                    Role::Alice => "alice",
                    Role::Bob => "bob",
                };
                format!("intercept-resend-{who}-{pool}")
            }
            AttackModel::CheatingCenterMeasureAll { basis } => format!("cheating-center-{}", basis.letter()),
            AttackModel::AncillaEntangle { coupling } => format!("ancilla-{coupling}"),
        }
    }

    pub fn validate(&self) -> Result<(), AdversaryError> {
        match self {
            AttackModel::InterceptResend { basis_pool, .. } if basis_pool.is_empty() => {
                Err(AdversaryError::InvalidParameter("basis_pool is empty".into()))
            }
            AttackModel::AncillaEntangle { coupling } if !(0.0..=1.0).contains(coupling) => Err(
                AdversaryError::InvalidParameter(format!("coupling {coupling} is not in [0, 1]")),
            ),
            _ => Ok(()),
        }
    }

    pub fn supports(&self, protocol: ProtocolId) -> Result<(), AdversaryError> {
        let ok = match self {
            AttackModel::None | AttackModel::InterceptResend { .. } => true,
            AttackModel::CheatingCenterMeasureAll { .. } => {
                matches!(protocol, ProtocolId::Ghz1 | ProtocolId::Ghz2)
            }
            AttackModel::AncillaEntangle { .. } => protocol.is_ghz(),
        };
        if ok {
            Ok(())
        } else {
            Err(AdversaryError::Unsupported {
                attack: self.label(),
                protocol,
            })
        }
    }
}

/// What the attacker saw at one position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Observation {
    Intercept { target: Role, basis: Basis, outcome: Outcome },
    /// Outcomes for the center's, Alice's and Bob's particles.
    CenterCheat { basis: Basis, outcomes: [Outcome; 3] },
    /// x values of Alice's and Bob's particles as read off the probe.
    Ancilla { alice_x: Outcome, bob_x: Outcome },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EveRecord {
    pub position: usize,
    pub observation: Observation,
    pub inferred_bit: Option<u8>,
}

/// Publicly announced data for one position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PublicView {
    pub announcement: Option<Announcement>,
    pub alice_basis: Option<Basis>,
    pub bob_basis: Option<Basis>,
}

impl PublicView {
    pub fn of(record: &PositionRecord) -> Self {
        PublicView {
            announcement: record.center_announcement,
            alice_basis: record.alice_basis,
            bob_basis: record.bob_basis,
        }
    }
}

/// Eve's guess of the key bit (Bob's outcome) at a position, if she has one.
pub fn infer_bit(protocol: ProtocolId, observation: &Observation, public: &PublicView) -> Option<u8> {
    let from_alice = |basis: Basis, outcome: Outcome| -> Option<u8> {
        if public.alice_basis != Some(basis) {
            return None;
        }
        let ann = public.announcement?;
        consistency_map(protocol, &ann, basis, outcome, public.bob_basis?)
            .ok()
            .map(Outcome::bit)
    };
    let from_bob = |basis: Basis, outcome: Outcome| (public.bob_basis == Some(basis)).then_some(outcome.bit());
    match *observation {
        Observation::Intercept {
            target: Role::Bob,
            basis,
            outcome,
        } => from_bob(basis, outcome),
        Observation::Intercept {
            target: Role::Alice,
            basis,
            outcome,
        } => from_alice(basis, outcome),
        Observation::CenterCheat { basis, outcomes } => {
            from_bob(basis, outcomes[2]).or_else(|| from_alice(basis, outcomes[1]))
        }
        Observation::Ancilla { alice_x, bob_x } => from_bob(Basis::X, bob_x).or_else(|| from_alice(Basis::X, alice_x)),
    }
}

/// Score of one guess against the true bit: 1 right, 0 wrong, ½ no guess.
pub fn guess_score(guess: Option<u8>, actual: u8) -> f64 {
    match guess {
        Some(g) if g == actual => 1.0,
        Some(_) => 0.0,
        None => 0.5,
    }
}

fn holder_of(role: Role) -> Holder {
    match role {
        Role::Alice => Holder::Alice,
        Role::Bob => Holder::Bob,
    }
}

/// Maps the probe's x readout to the users' x values it indicates.
pub fn ancilla_observation(probe0: Outcome, probe1: Outcome) -> Observation {
    let index = 2 * probe0.bit() + probe1.bit();
    let (alice_x, bob_x) = ancilla::BRANCH_ORDER[index as usize];
    Observation::Ancilla { alice_x, bob_x }
}

/// Live attack instance inside one session.
pub struct Adversary {
    model: AttackModel,
    rng: SimRng,
    records: Vec<EveRecord>,
}

impl Adversary {
    pub fn new(model: AttackModel, rng: SimRng) -> Self {
        Adversary {
            model,
            rng,
            records: Vec::new(),
        }
    }

    pub fn model(&self) -> &AttackModel {
        &self.model
    }

    /// Tampering at the center, before particles leave it.
    pub fn at_source(&mut self, position: usize, register: &mut Register) -> Result<(), AdversaryError> {
        if let AttackModel::CheatingCenterMeasureAll { basis } = self.model {
            let mut outcomes = [Outcome::Plus; 3];
            for (slot, holder) in outcomes.iter_mut().zip([Holder::Center, Holder::Alice, Holder::Bob]) {
                let draw: f64 = self.rng.random();
                *slot = register.measure_and_resend(holder, basis, draw)?;
            }
            self.record(position, Observation::CenterCheat { basis, outcomes });
        }
        Ok(())
    }

    /// Tampering on the quantum channel.
    pub fn in_transit(&mut self, position: usize, register: &mut Register) -> Result<(), AdversaryError> {
        match &self.model {
            AttackModel::InterceptResend { target, basis_pool } => {
                let target = *target;
                let basis = basis_pool[self.rng.random_range(0..basis_pool.len())];
                let draw: f64 = self.rng.random();
                let outcome = register.measure_and_resend(holder_of(target), basis, draw)?;
                self.record(position, Observation::Intercept { target, basis, outcome });
            }
            AttackModel::AncillaEntangle { coupling } => apply_ancilla(register, *coupling)?,
            _ => {}
        }
        Ok(())
    }

    /// Reads the probe once the users are done with the position.
    pub fn read_probe(&mut self, position: usize, register: &mut Register) -> Result<(), AdversaryError> {
        if !matches!(self.model, AttackModel::AncillaEntangle { .. }) {
            return Ok(());
        }
        let d0: f64 = self.rng.random();
        let d1: f64 = self.rng.random();
        let p0 = register.measure(Holder::Probe0, Basis::X, d0)?;
        let p1 = register.measure(Holder::Probe1, Basis::X, d1)?;
        self.record(position, ancilla_observation(p0, p1));
        Ok(())
    }

    fn record(&mut self, position: usize, observation: Observation) {
        self.records.push(EveRecord {
            position,
            observation,
            inferred_bit: None,
        });
    }

    /// Fills in Eve's inferences from public data and scores them against
    /// the kept, unchecked positions.
    pub fn finish(
        mut self,
        protocol: ProtocolId,
        positions: &[PositionRecord],
        observed_detection_rate: Option<f64>,
    ) -> Result<AdversaryReport, AdversaryError> {
        let prediction = predict(protocol, &self.model)?;
        let mut score = 0.0;
        let mut scored = 0usize;
        for record in &mut self.records {
            let position = &positions[record.position];
            record.inferred_bit = infer_bit(protocol, &record.observation, &PublicView::of(position));
            if position.kept && !position.used_for_check {
                if let Some(bob) = position.bob_outcome {
                    score += guess_score(record.inferred_bit, bob.bit());
                    scored += 1;
                }
            }
        }
        Ok(AdversaryReport {
            attack: self.model,
            predicted_detection_rate: prediction.detection_rate,
            observed_detection_rate,
            predicted_eve_accuracy: prediction.eve_accuracy,
            observed_eve_accuracy: (scored > 0).then(|| score / scored as f64),
            scored_positions: scored,
            records: self.records,
        })
    }
}

/// The `adversary` section of a session transcript.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversaryReport {
    pub attack: AttackModel,
    pub predicted_detection_rate: f64,
    /// Error rate on checked positions; absent when nothing was checked.
    pub observed_detection_rate: Option<f64>,
    pub predicted_eve_accuracy: f64,
    pub observed_eve_accuracy: Option<f64>,
    pub scored_positions: usize,
    pub records: Vec<EveRecord>,
}

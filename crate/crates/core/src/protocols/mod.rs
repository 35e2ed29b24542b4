//! The five trusted-center key distribution protocols.
//!
//! Three protocols share one GHZ triplet per position (the center holds qubit
//! 0, Alice qubit 1, Bob qubit 2); two hand Alice and Bob a labelled
//! two-qubit state. Each session runs the center, Alice and Bob as separate
//! state machines that talk only through classical messages, while the
//! quantum medium carries particles and applies loss and attacks.

mod check;
mod efficiency;
mod rules;
mod session;
mod transcript;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::{AdversaryError, AttackModel};
use crate::postproc::{DistillConfig, PostprocError};
use crate::qstate::{Announcement, Basis, QStateError, TwoQubitLabel};

pub use check::{abort_probability, select_check_positions, CheckReport};
pub use efficiency::{efficiency_bound, measured_efficiency, TIME_RESERVED_BASELINE};
pub use rules::{center_basis_rule_p3, consistency_map, encode_bit, keep_rule, Role};
pub use session::{run_session, run_session_with_legs, LegLoss};
pub use transcript::{
    Actor, BasisPairStats, Event, EventKind, MessageKind, PositionRecord, SessionTranscript, SummaryRow, SCHEMA_VERSION,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ProtocolId {
    #[serde(rename = "GHZ1")]
    Ghz1,
    #[serde(rename = "GHZ2")]
    Ghz2,
    #[serde(rename = "GHZ3")]
    Ghz3,
    #[serde(rename = "BELL4")]
    Bell4,
    #[serde(rename = "BELL5")]
    Bell5,
}

impl ProtocolId {
    pub const ALL: [ProtocolId; 5] = [
        ProtocolId::Ghz1,
        ProtocolId::Ghz2,
        ProtocolId::Ghz3,
        ProtocolId::Bell4,
        ProtocolId::Bell5,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProtocolId::Ghz1 => "GHZ1",
            ProtocolId::Ghz2 => "GHZ2",
            ProtocolId::Ghz3 => "GHZ3",
            ProtocolId::Bell4 => "BELL4",
            ProtocolId::Bell5 => "BELL5",
        }
    }

    pub fn is_ghz(self) -> bool {
        matches!(self, ProtocolId::Ghz1 | ProtocolId::Ghz2 | ProtocolId::Ghz3)
    }

    /// Bases Alice and Bob choose from.
    pub fn user_bases(self) -> [Basis; 2] {
        if self.is_ghz() {
            [Basis::X, Basis::Y]
        } else {
            [Basis::X, Basis::Z]
        }
    }

    /// States the center hands out in the Bell-state protocols.
    pub fn pair_labels(self) -> Option<[TwoQubitLabel; 4]> {
        use TwoQubitLabel::*;
        match self {
            ProtocolId::Bell4 => Some([PsiPlus, PsiMinus, PhiPlus, PhiMinus]),
            ProtocolId::Bell5 => Some([PhiPlus, PsiMinus, CombPhiMinus, CombPsiPlus]),
            _ => None,
        }
    }

    /// Whether `announcement` has the shape this protocol's center produces.
    pub fn accepts(self, announcement: &Announcement) -> bool {
        match (self, announcement) {
            (ProtocolId::Ghz1, Announcement::Measured { basis, .. }) => *basis == Basis::X,
            (ProtocolId::Ghz2 | ProtocolId::Ghz3, Announcement::Measured { basis, .. }) => {
                matches!(basis, Basis::X | Basis::Y)
            }
            (ProtocolId::Bell4 | ProtocolId::Bell5, Announcement::Pair(label)) => {
                self.pair_labels().is_some_and(|labels| labels.contains(label))
            }
            _ => false,
        }
    }
}

impl fmt::Display for ProtocolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolId {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ProtocolId::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| ProtocolError::UnknownProtocol(s.to_string()))
    }
}

/// Full parameterization of one session. Missing JSON fields take the
/// [`Default`] values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionConfig {
    pub protocol: ProtocolId,
    /// Entangled states the center prepares.
    pub num_states: usize,
    /// Fraction of sifted positions disclosed for the eavesdropping check.
    pub check_fraction: f64,
    /// The session aborts when the check error rate exceeds this.
    pub qber_abort_threshold: f64,
    /// Per-particle erasure probability on each quantum leg.
    pub loss_probability: f64,
    pub rng_seed: u64,
    pub attack: AttackModel,
    pub distill: DistillConfig,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            protocol: ProtocolId::Ghz1,
            num_states: 10_000,
            check_fraction: 0.1,
            qber_abort_threshold: 0.0,
            loss_probability: 0.0,
            rng_seed: 0,
            attack: AttackModel::None,
            distill: DistillConfig::default(),
        }
    }
}

impl SessionConfig {
    pub fn new(protocol: ProtocolId, num_states: usize, rng_seed: u64) -> Self {
        SessionConfig {
            protocol,
            num_states,
            rng_seed,
            ..SessionConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        let invalid = |field: &'static str, reason: String| Err(ProtocolError::InvalidConfig { field, reason });
        if self.num_states == 0 {
            return invalid("num_states", "must be at least 1".into());
        }
        if !(self.check_fraction > 0.0 && self.check_fraction < 1.0) {
            return invalid("check_fraction", format!("{} is not in (0, 1)", self.check_fraction));
        }
        if !(0.0..1.0).contains(&self.qber_abort_threshold) {
            return invalid("qber_abort_threshold", format!("{} is not in [0, 1)", self.qber_abort_threshold));
        }
        if !(0.0..=1.0).contains(&self.loss_probability) {
            return invalid("loss_probability", format!("{} is not in [0, 1]", self.loss_probability));
        }
        self.distill.validate()?;
        self.attack.validate()?;
        self.attack.supports(self.protocol)?;
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("unknown protocol {0:?} (expected GHZ1, GHZ2, GHZ3, BELL4 or BELL5)")]
    UnknownProtocol(String),
    #[error("invalid {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("{protocol} cannot interpret announcement {announcement}")]
    MismatchedAnnouncement { protocol: ProtocolId, announcement: Announcement },
    #[error("basis {0} is not used by this protocol step")]
    UnsupportedBasis(Basis),
    #[error("{announcement} with Alice {alice_basis}{alice_outcome} does not fix Bob's {bob_basis} outcome")]
    NotDeterministic {
        announcement: Announcement,
        alice_basis: Basis,
        alice_outcome: crate::qstate::Outcome,
        bob_basis: Basis,
    },
    #[error("position {0} is not part of the key")]
    NotKeyPosition(usize),
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
    #[error(transparent)]
    State(#[from] QStateError),
    #[error(transparent)]
    Postproc(#[from] PostprocError),
}

use serde::{Deserialize, Serialize};

use super::{consistency_map, CheckReport, LegLoss, ProtocolId, SessionConfig};
use crate::adversary::AdversaryReport;
use crate::postproc::{BitString, DistillReport};
use crate::qstate::{Announcement, Basis, Outcome};

/// Version stamped on every JSON document the crate writes.
pub const SCHEMA_VERSION: u32 = 1;

/// Everything recorded about one prepared state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionRecord {
    pub index: usize,
    /// A particle on at least one leg was lost.
    pub lost: bool,
    pub center_announcement: Option<Announcement>,
    pub alice_basis: Option<Basis>,
    pub alice_outcome: Option<Outcome>,
    pub bob_basis: Option<Basis>,
    pub bob_outcome: Option<Outcome>,
    pub kept: bool,
    pub used_for_check: bool,
}

impl PositionRecord {
    /// Whether Bob's outcome differs from the value Alice derives for it.
    /// `None` unless the position is kept and fully measured.
    pub fn mismatch(&self, protocol: ProtocolId) -> Option<bool> {
        if !self.kept {
            return None;
        }
        let predicted = consistency_map(
            protocol,
            &self.center_announcement?,
            self.alice_basis?,
            self.alice_outcome?,
            self.bob_basis?,
        )
        .ok()?;
        Some(predicted != self.bob_outcome?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Actor {
    Center,
    Alice,
    Bob,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageKind {
    Announcements,
    Bases,
    CheckRequest,
    CheckVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    Prepared { states: usize },
    Distributed { arrived_alice: usize, arrived_bob: usize },
    Measured { positions: usize },
    Sent { to: Actor, message: MessageKind },
    Received { from: Actor, message: MessageKind },
    Sifted { kept: usize },
    CheckEvaluated { checked: usize, errors: usize, aborted: bool },
    KeyFormed { bits: usize },
}

/// One step of the session, in the order it happened.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub seq: usize,
    pub actor: Actor,
    #[serde(flatten)]
    pub kind: EventKind,
}

/// Check errors observed for one pair of user bases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisPairStats {
    pub alice_basis: Basis,
    pub bob_basis: Basis,
    pub checked: usize,
    pub errors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionTranscript {
    pub schema_version: u32,
    pub config: SessionConfig,
    pub legs: LegLoss,
    pub events: Vec<Event>,
    pub positions: Vec<PositionRecord>,
    pub check: CheckReport,
    /// Kept, unchecked bits before distillation; empty when aborted.
    pub alice_raw_key: BitString,
    pub bob_raw_key: BitString,
    /// Absent when the session aborted.
    pub distillation: Option<DistillReport>,
    pub efficiency_measured: f64,
    pub efficiency_bound: f64,
    pub efficiency_baseline: f64,
    pub adversary: Option<AdversaryReport>,
}

impl SessionTranscript {
    pub fn kept_count(&self) -> usize {
        self.positions.iter().filter(|p| p.kept).count()
    }

    /// Kept positions per prepared state, before the check is removed.
    pub fn kept_fraction(&self) -> f64 {
        self.kept_count() as f64 / self.config.num_states as f64
    }

    pub fn lost_count(&self) -> usize {
        self.positions.iter().filter(|p| p.lost).count()
    }

    pub fn aborted(&self) -> bool {
        self.check.aborted
    }

    pub fn qber(&self) -> f64 {
        self.check.qber
    }

    pub fn final_key_bits(&self) -> usize {
        self.distillation.as_ref().map_or(0, |d| d.final_length)
    }

    pub fn alice_final_key(&self) -> Option<&BitString> {
        self.distillation.as_ref().map(|d| &d.alice.bits)
    }

    pub fn bob_final_key(&self) -> Option<&BitString> {
        self.distillation.as_ref().map(|d| &d.bob.bits)
    }

    /// Check errors grouped by the users' basis pair, in basis order.
    pub fn check_stats_by_bases(&self) -> Vec<BasisPairStats> {
        let mut stats: Vec<BasisPairStats> = Vec::new();
        for p in self.positions.iter().filter(|p| p.used_for_check) {
            let (Some(alice_basis), Some(bob_basis)) = (p.alice_basis, p.bob_basis) else {
                continue;
            };
            let error = p.mismatch(self.config.protocol).unwrap_or(false);
            match stats
                .iter_mut()
                .find(|s| s.alice_basis == alice_basis && s.bob_basis == bob_basis)
            {
                Some(s) => {
                    s.checked += 1;
                    s.errors += usize::from(error);
                }
                None => stats.push(BasisPairStats {
                    alice_basis,
                    bob_basis,
                    checked: 1,
                    errors: usize::from(error),
                }),
            }
        }
        stats.sort_by_key(|s| (s.alice_basis, s.bob_basis));
        stats
    }

    pub fn summary_row(&self) -> SummaryRow {
        SummaryRow {
            protocol: self.config.protocol,
            num_states: self.config.num_states,
            loss: self.config.loss_probability,
            attack: self.config.attack.label(),
            kept_fraction: self.kept_fraction(),
            qber: self.qber(),
            aborted: self.aborted(),
            key_bits: self.final_key_bits(),
            efficiency_measured: self.efficiency_measured,
            efficiency_bound: self.efficiency_bound,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("transcript serializes")
    }
}

/// One line of the per-session CSV summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub protocol: ProtocolId,
    pub num_states: usize,
    pub loss: f64,
    pub attack: String,
    pub kept_fraction: f64,
    pub qber: f64,
    pub aborted: bool,
    pub key_bits: usize,
    pub efficiency_measured: f64,
    pub efficiency_bound: f64,
}

impl SummaryRow {
    pub const CSV_HEADER: &'static str =
        "protocol,num_states,loss,attack,kept_fraction,qber,aborted,key_bits,efficiency_measured,efficiency_bound";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.protocol,
            self.num_states,
            self.loss,
            self.attack,
            self.kept_fraction,
            self.qber,
            self.aborted,
            self.key_bits,
            self.efficiency_measured,
            self.efficiency_bound
        )
    }
}

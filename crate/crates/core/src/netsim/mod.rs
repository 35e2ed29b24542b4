//! A trusted center serving many registered users over lossy channels.
//!
//! Users register once; any two of them may then ask the center for a
//! session, which runs the chosen protocol with each user's own channel as
//! that user's quantum leg.

mod scenario;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocols::{run_session_with_legs, LegLoss, ProtocolError, SessionConfig, SessionTranscript};

pub use scenario::{
    run_network_scenario, Execution, NetworkScenario, ProtocolAggregate, ScenarioReport, ScenarioRun, SessionOutcome,
    SessionSpec, UserAggregate, SESSION_CSV_HEADER,
};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UserId(String);

impl UserId {
    pub fn new(id: impl Into<String>) -> Self {
        UserId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for UserId {
    fn from(s: &str) -> Self {
        UserId::new(s)
    }
}

/// Quantum channel between the center and one user.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelModel {
    /// Independent per-particle loss, in `[0, 1)`.
    pub loss_probability: f64,
    pub latency_ticks: u64,
}

impl ChannelModel {
    pub fn lossy(loss_probability: f64) -> Self {
        ChannelModel {
            loss_probability,
            latency_ticks: 0,
        }
    }

    fn validate(&self) -> Result<(), NetError> {
        if (0.0..1.0).contains(&self.loss_probability) {
            Ok(())
        } else {
            Err(NetError::InvalidChannel(self.loss_probability))
        }
    }
}

#[derive(Debug, Error)]
pub enum NetError {
    #[error("user {0} is already registered")]
    DuplicateUser(UserId),
    #[error("user {0} is not registered")]
    UnknownUser(UserId),
    #[error("user {0} cannot open a session with itself")]
    SelfSession(UserId),
    #[error("user {0} failed identity verification")]
    IdentityRejected(UserId),
    #[error("channel loss {0} is not in [0, 1)")]
    InvalidChannel(f64),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("scenario file: {0}")]
    Scenario(#[from] serde_json::Error),
}

/// Users known to the center and their channels.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Registry {
    users: BTreeMap<UserId, ChannelModel>,
}

impl Registry {
    pub fn new() -> Self {
        Registry::default()
    }

    /// Registers `id` with an ideal channel.
    pub fn register_user(&mut self, id: impl Into<String>) -> Result<UserId, NetError> {
        self.register_with_channel(id, ChannelModel::default())
    }

    pub fn register_with_channel(&mut self, id: impl Into<String>, channel: ChannelModel) -> Result<UserId, NetError> {
        channel.validate()?;
        let id = UserId::new(id);
        if self.users.contains_key(&id) {
            return Err(NetError::DuplicateUser(id));
        }
        self.users.insert(id.clone(), channel);
        Ok(id)
    }

    pub fn set_channel(&mut self, id: &UserId, channel: ChannelModel) -> Result<(), NetError> {
        channel.validate()?;
        let slot = self.users.get_mut(id).ok_or_else(|| NetError::UnknownUser(id.clone()))?;
        *slot = channel;
        Ok(())
    }

    pub fn channel(&self, id: &UserId) -> Result<ChannelModel, NetError> {
        self.users.get(id).copied().ok_or_else(|| NetError::UnknownUser(id.clone()))
    }

    pub fn contains(&self, id: &UserId) -> bool {
        self.users.contains_key(id)
    }

    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    pub fn users(&self) -> impl Iterator<Item = &UserId> {
        self.users.keys()
    }

    /// Identity verification before a session. Always accepts; this is
    /// where a real authentication scheme would plug in.
    pub fn verify_identity(&self, _id: &UserId) -> bool {
        true
    }

    /// Runs `config` between two registered users. The requester takes
    /// Alice's role and the responder Bob's; each leg uses that user's
    /// channel loss.
    pub fn request_session(
        &self,
        requester: &UserId,
        responder: &UserId,
        config: &SessionConfig,
    ) -> Result<SessionTranscript, NetError> {
        if requester == responder {
            return Err(NetError::SelfSession(requester.clone()));
        }
        let alice = self.channel(requester)?;
        let bob = self.channel(responder)?;
        for id in [requester, responder] {
            if !self.verify_identity(id) {
                return Err(NetError::IdentityRejected(id.clone()));
            }
        }
        let legs = LegLoss {
            alice: alice.loss_probability,
            bob: bob.loss_probability,
        };
        Ok(run_session_with_legs(config, legs)?)
    }
}

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ChannelModel, NetError, Registry, UserId};
use crate::protocols::{ProtocolId, SessionConfig, SessionTranscript, SCHEMA_VERSION};
use crate::rng::derive_seed;

/// One requested session. Without an explicit `seed` the session seed is
/// derived from the scenario seed and the session's index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSpec {
    pub requester: UserId,
    pub responder: UserId,
    #[serde(default)]
    pub config: SessionConfig,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NetworkScenario {
    pub users: Vec<UserId>,
    /// Users without an entry get an ideal channel.
    #[serde(default)]
    pub channels: BTreeMap<UserId, ChannelModel>,
    #[serde(default)]
    pub sessions: Vec<SessionSpec>,
    #[serde(default)]
    pub seed: u64,
}

impl NetworkScenario {
    pub fn from_json(text: &str) -> Result<Self, NetError> {
        Ok(serde_json::from_str(text)?)
    }

    /// Builds the registry; fails on duplicate users, channels for
    /// unknown users, or invalid channels.
    pub fn registry(&self) -> Result<Registry, NetError> {
        let mut registry = Registry::new();
        for user in &self.users {
            registry.register_user(user.as_str())?;
        }
        for (user, channel) in &self.channels {
            registry.set_channel(user, *channel)?;
        }
        Ok(registry)
    }

    /// The configuration a session actually runs with.
    pub fn session_config(&self, index: usize) -> SessionConfig {
        let spec = &self.sessions[index];
        let mut config = spec.config.clone();
        config.rng_seed = spec.seed.unwrap_or_else(|| derive_seed(self.seed, index as u64));
        config
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Sessions run on the rayon pool; results are identical to sequential.
    Parallel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionOutcome {
    pub index: usize,
    pub requester: UserId,
    pub responder: UserId,
    pub protocol: ProtocolId,
    pub seed: u64,
    pub loss_requester: f64,
    pub loss_responder: f64,
    /// Time for both particles to reach their users.
    pub latency_ticks: u64,
    pub attack: String,
    pub num_states: usize,
    pub kept_fraction: Option<f64>,
    pub qber: Option<f64>,
    pub aborted: Option<bool>,
    pub key_bits: Option<usize>,
    pub keys_agree: Option<bool>,
    pub efficiency_measured: Option<f64>,
    pub efficiency_bound: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolAggregate {
    pub protocol: ProtocolId,
    pub sessions: usize,
    pub failed: usize,
    pub aborted: usize,
    pub mean_kept_fraction: f64,
    pub mean_qber: f64,
    pub mean_efficiency: f64,
    pub total_key_bits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserAggregate {
    pub user: UserId,
    pub loss_probability: f64,
    pub sessions: usize,
    pub aborted: usize,
    pub total_key_bits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub schema_version: u32,
    pub seed: u64,
    pub sessions: Vec<SessionOutcome>,
    pub by_protocol: Vec<ProtocolAggregate>,
    pub by_user: Vec<UserAggregate>,
}

pub const SESSION_CSV_HEADER: &str = "index,requester,responder,protocol,seed,loss_requester,loss_responder,attack,num_states,kept_fraction,qber,aborted,key_bits,efficiency_measured,efficiency_bound,error";

impl ScenarioReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> String {
        fn opt<T: ToString>(v: &Option<T>) -> String {
            v.as_ref().map(T::to_string).unwrap_or_default()
        }
        let mut out = String::from(SESSION_CSV_HEADER);
        out.push('\n');
        for s in &self.sessions {
            let error = s.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                s.index,
                s.requester,
                s.responder,
                s.protocol,
                s.seed,
                s.loss_requester,
                s.loss_responder,
                s.attack,
                s.num_states,
                opt(&s.kept_fraction),
                opt(&s.qber),
                opt(&s.aborted),
                opt(&s.key_bits),
                opt(&s.efficiency_measured),
                opt(&s.efficiency_bound),
                error
            ));
        }
        out
    }
}

/// Transcripts (or errors) in session order plus the aggregate report.
#[derive(Debug)]
pub struct ScenarioRun {
    pub transcripts: Vec<Result<SessionTranscript, String>>,
    pub report: ScenarioReport,
}

/// Executes every session of `scenario`. A failing session is recorded and
/// the rest still run; only an invalid user list or channel map fails the
/// whole scenario.
pub fn run_network_scenario(scenario: &NetworkScenario, execution: Execution) -> Result<ScenarioRun, NetError> {
    let registry = scenario.registry()?;
    let run_one = |index: usize| -> Result<SessionTranscript, String> {
        let spec = &scenario.sessions[index];
        registry
            .request_session(&spec.requester, &spec.responder, &scenario.session_config(index))
            .map_err(|e| e.to_string())
    };
    let indices = 0..scenario.sessions.len();
    let transcripts: Vec<Result<SessionTranscript, String>> = match execution {
        Execution::Sequential => indices.map(run_one).collect(),
        Execution::Parallel => indices.into_par_iter().map(run_one).collect(),
    };

    let sessions: Vec<SessionOutcome> = transcripts
        .iter()
        .enumerate()
        .map(|(index, result)| outcome(scenario, &registry, index, result))
        .collect();
    let report = ScenarioReport {
        schema_version: SCHEMA_VERSION,
        seed: scenario.seed,
        by_protocol: by_protocol(&sessions),
        by_user: by_user(&registry, &sessions),
        sessions,
    };
    Ok(ScenarioRun { transcripts, report })
}

fn outcome(
    scenario: &NetworkScenario,
    registry: &Registry,
    index: usize,
    result: &Result<SessionTranscript, String>,
) -> SessionOutcome {
    let spec = &scenario.sessions[index];
    let config = scenario.session_config(index);
    let channel = |u: &UserId| registry.channel(u).unwrap_or_default();
    let (a, b) = (channel(&spec.requester), channel(&spec.responder));
    let ok = result.as_ref().ok();
    SessionOutcome {
        index,
        requester: spec.requester.clone(),
        responder: spec.responder.clone(),
        protocol: config.protocol,
        seed: config.rng_seed,
        loss_requester: a.loss_probability,
        loss_responder: b.loss_probability,
        latency_ticks: a.latency_ticks.max(b.latency_ticks),
        attack: config.attack.label(),
        num_states: config.num_states,
        kept_fraction: ok.map(SessionTranscript::kept_fraction),
        qber: ok.map(SessionTranscript::qber),
        aborted: ok.map(SessionTranscript::aborted),
        key_bits: ok.map(SessionTranscript::final_key_bits),
        keys_agree: ok.map(|t| t.alice_final_key() == t.bob_final_key()),
        efficiency_measured: ok.map(|t| t.efficiency_measured),
        efficiency_bound: ok.map(|t| t.efficiency_bound),
        error: result.as_ref().err().cloned(),
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn by_protocol(sessions: &[SessionOutcome]) -> Vec<ProtocolAggregate> {
    ProtocolId::ALL
        .into_iter()
        .filter_map(|protocol| {
            let group: Vec<&SessionOutcome> = sessions.iter().filter(|s| s.protocol == protocol).collect();
            if group.is_empty() {
                return None;
            }
            let done: Vec<&&SessionOutcome> = group.iter().filter(|s| s.error.is_none()).collect();
            Some(ProtocolAggregate {
                protocol,
                sessions: group.len(),
                failed: group.len() - done.len(),
                aborted: done.iter().filter(|s| s.aborted == Some(true)).count(),
                mean_kept_fraction: mean(done.iter().filter_map(|s| s.kept_fraction)),
                mean_qber: mean(done.iter().filter_map(|s| s.qber)),
                mean_efficiency: mean(done.iter().filter_map(|s| s.efficiency_measured)),
                total_key_bits: done.iter().filter_map(|s| s.key_bits).sum(),
            })
        })
        .collect()
}

fn by_user(registry: &Registry, sessions: &[SessionOutcome]) -> Vec<UserAggregate> {
    registry
        .users()
        .map(|user| {
            let mine: Vec<&SessionOutcome> = sessions
                .iter()
                .filter(|s| s.error.is_none() && (&s.requester == user || &s.responder == user))
                .collect();
            UserAggregate {
                user: user.clone(),
                loss_probability: registry.channel(user).map(|c| c.loss_probability).unwrap_or_default(),
                sessions: mine.len(),
                aborted: mine.iter().filter(|s| s.aborted == Some(true)).count(),
                total_key_bits: mine.iter().filter_map(|s| s.key_bits).sum(),
            }
        })
        .collect()
}

//! Session driver: three party state machines exchanging classical
//! messages over an in-order bus, plus a quantum medium that carries
//! particles through the attack middleware and the lossy legs.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::check::select_check_positions;
use super::transcript::MessageKind;
use super::{
    center_basis_rule_p3, consistency_map, efficiency_bound, keep_rule, Actor, CheckReport, Event, EventKind,
    PositionRecord, ProtocolError, ProtocolId, Role, SessionConfig, SessionTranscript, SCHEMA_VERSION,
    TIME_RESERVED_BASELINE,
};
use crate::adversary::Adversary;
use crate::postproc::{distill, BitString};
use crate::qstate::{ghz, make_two_qubit, Announcement, Basis, Outcome};
use crate::register::{Holder, Register};
use crate::rng::{derive_seed, stream, SimRng, Stream};

/// Per-particle loss probability on the center→Alice and center→Bob legs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegLoss {
    pub alice: f64,
    pub bob: f64,
}

impl LegLoss {
    pub fn uniform(p: f64) -> Self {
        LegLoss { alice: p, bob: p }
    }

    fn validate(&self) -> Result<(), ProtocolError> {
        for p in [self.alice, self.bob] {
            if !(0.0..=1.0).contains(&p) {
                return Err(ProtocolError::InvalidConfig {
                    field: "loss_probability",
                    reason: format!("{p} is not in [0, 1]"),
                });
            }
        }
        Ok(())
    }
}

/// Runs one session with the same loss on both legs.
pub fn run_session(config: &SessionConfig) -> Result<SessionTranscript, ProtocolError> {
    run_session_with_legs(config, LegLoss::uniform(config.loss_probability))
}

/// Runs one session with separate loss on each leg.
pub fn run_session_with_legs(config: &SessionConfig, legs: LegLoss) -> Result<SessionTranscript, ProtocolError> {
    config.validate()?;
    legs.validate()?;
    let seed = config.rng_seed;
    let mut medium = Medium {
        registers: Vec::new(),
        arrived: Vec::new(),
        legs,
        channel: stream(seed, Stream::Channel),
        adversary: Adversary::new(config.attack.clone(), stream(seed, Stream::Eve)),
    };
    let mut center = CenterNode::new(config, stream(seed, Stream::Center));
    let mut alice = UserNode::new(Role::Alice, config, stream(seed, Stream::Alice));
    let mut bob = UserNode::new(Role::Bob, config, stream(seed, Stream::Bob));
    let mut bus = Bus::default();

    {
        let mut ctx = Ctx {
            medium: &mut medium,
            bus: &mut bus,
        };
        center.start(&mut ctx)?;
        alice.start(&mut ctx)?;
        bob.start(&mut ctx)?;
    }
    while let Some(envelope) = bus.queue.pop_front() {
        bus.log(
            envelope.to,
            EventKind::Received {
                from: envelope.from,
                message: envelope.message.kind(),
            },
        );
        let mut ctx = Ctx {
            medium: &mut medium,
            bus: &mut bus,
        };
        match envelope.to {
            Actor::Center => center.receive(envelope.from, envelope.message, &mut ctx)?,
            Actor::Alice => alice.receive(envelope.from, envelope.message, &mut ctx)?,
            Actor::Bob => bob.receive(envelope.from, envelope.message, &mut ctx)?,
        }
    }

    finish(config, legs, medium, center, alice, bob, bus.events)
}

#[derive(Debug, Clone)]
enum Message {
    Announcements(Vec<Option<Announcement>>),
    Bases(Vec<Option<Basis>>),
    CheckRequest { positions: Vec<usize>, bob_outcomes: Vec<Outcome> },
    CheckVerdict(CheckReport),
}

impl Message {
    fn kind(&self) -> MessageKind {
        match self {
            Message::Announcements(_) => MessageKind::Announcements,
            Message::Bases(_) => MessageKind::Bases,
            Message::CheckRequest { .. } => MessageKind::CheckRequest,
            Message::CheckVerdict(_) => MessageKind::CheckVerdict,
        }
    }
}

struct Envelope {
    from: Actor,
    to: Actor,
    message: Message,
}

/// Authenticated classical channel, delivered in send order.
#[derive(Default)]
struct Bus {
    queue: VecDeque<Envelope>,
    events: Vec<Event>,
}

impl Bus {
    fn log(&mut self, actor: Actor, kind: EventKind) {
        let seq = self.events.len();
        self.events.push(Event { seq, actor, kind });
    }

    fn send(&mut self, from: Actor, to: Actor, message: Message) {
        self.log(from, EventKind::Sent { to, message: message.kind() });
        self.queue.push_back(Envelope { from, to, message });
    }
}

/// Quantum side of the session: registers in flight, loss and attacks.
struct Medium {
    registers: Vec<Register>,
    /// Whether Alice's and Bob's particle arrived at each position.
    arrived: Vec<[bool; 2]>,
    legs: LegLoss,
    channel: SimRng,
    adversary: Adversary,
}

impl Medium {
    /// Sends every register through the attacker and both legs. A lost
    /// particle decoheres into the environment, modelled as a z
    /// measurement drawn from the channel stream.
    fn transmit(&mut self, registers: Vec<Register>) -> Result<(), ProtocolError> {
        for (position, mut register) in registers.into_iter().enumerate() {
            self.adversary.at_source(position, &mut register)?;
            self.adversary.in_transit(position, &mut register)?;
            let mut arrived = [true; 2];
            for (slot, holder, p) in [(0, Holder::Alice, self.legs.alice), (1, Holder::Bob, self.legs.bob)] {
                let lose: f64 = self.channel.random();
                let environment: f64 = self.channel.random();
                if lose < p {
                    register.measure(holder, Basis::Z, environment)?;
                    arrived[slot] = false;
                }
            }
            self.registers.push(register);
            self.arrived.push(arrived);
        }
        Ok(())
    }

    fn has_arrived(&self, position: usize, role: Role) -> bool {
        self.arrived[position][match role {
            Role::Alice => 0,
            Role::Bob => 1,
        }]
    }

    fn measure(&mut self, position: usize, holder: Holder, basis: Basis, draw: f64) -> Result<Outcome, ProtocolError> {
        Ok(self.registers[position].measure(holder, basis, draw)?)
    }
}

struct Ctx<'a> {
    medium: &'a mut Medium,
    bus: &'a mut Bus,
}

struct CenterNode {
    protocol: ProtocolId,
    num_states: usize,
    rng: SimRng,
    announcements: Vec<Option<Announcement>>,
    alice_bases: Option<Vec<Option<Basis>>>,
    bob_bases: Option<Vec<Option<Basis>>>,
}

impl CenterNode {
    fn new(config: &SessionConfig, rng: SimRng) -> Self {
        CenterNode {
            protocol: config.protocol,
            num_states: config.num_states,
            rng,
            announcements: vec![None; config.num_states],
            alice_bases: None,
            bob_bases: None,
        }
    }

    fn start(&mut self, ctx: &mut Ctx) -> Result<(), ProtocolError> {
        let registers: Vec<Register> = match self.protocol.pair_labels() {
            None => (0..self.num_states)
                .map(|_| Register::new(ghz(), vec![Holder::Center, Holder::Alice, Holder::Bob]))
                .collect(),
            Some(labels) => (0..self.num_states)
                .map(|i| {
                    let label = labels[self.rng.random_range(0..labels.len())];
                    self.announcements[i] = Some(Announcement::Pair(label));
                    Register::new(make_two_qubit(label), vec![Holder::Alice, Holder::Bob])
                })
                .collect(),
        };
        ctx.bus.log(Actor::Center, EventKind::Prepared { states: self.num_states });
        ctx.medium.transmit(registers)?;
        let arrived = &ctx.medium.arrived;
        ctx.bus.log(
            Actor::Center,
            EventKind::Distributed {
                arrived_alice: arrived.iter().filter(|a| a[0]).count(),
                arrived_bob: arrived.iter().filter(|a| a[1]).count(),
            },
        );
        match self.protocol {
            ProtocolId::Ghz1 | ProtocolId::Ghz2 => {
                for i in 0..self.num_states {
                    let basis = match self.protocol {
                        ProtocolId::Ghz1 => Basis::X,
                        _ if self.rng.random_bool(0.5) => Basis::X,
                        _ => Basis::Y,
                    };
                    let draw: f64 = self.rng.random();
                    let outcome = ctx.medium.measure(i, Holder::Center, basis, draw)?;
                    self.announcements[i] = Some(Announcement::measured(basis, outcome));
                }
                ctx.bus.log(Actor::Center, EventKind::Measured { positions: self.num_states });
                self.announce(ctx);
            }
            ProtocolId::Bell4 | ProtocolId::Bell5 => self.announce(ctx),
            // waits for both users' bases
            ProtocolId::Ghz3 => {}
        }
        Ok(())
    }

    fn announce(&self, ctx: &mut Ctx) {
        for to in [Actor::Alice, Actor::Bob] {
            ctx.bus
                .send(Actor::Center, to, Message::Announcements(self.announcements.clone()));
        }
    }

    fn receive(&mut self, from: Actor, message: Message, ctx: &mut Ctx) -> Result<(), ProtocolError> {
        let Message::Bases(bases) = message else {
            return Ok(());
        };
        match from {
            Actor::Alice => self.alice_bases = Some(bases),
            Actor::Bob => self.bob_bases = Some(bases),
            Actor::Center => {}
        }
        let (Some(alice), Some(bob)) = (&self.alice_bases, &self.bob_bases) else {
            return Ok(());
        };
        let mut measured = 0;
        for i in 0..self.num_states {
            let draw: f64 = self.rng.random();
            if let (Some(a), Some(b)) = (alice[i], bob[i]) {
                let basis = center_basis_rule_p3(a, b)?;
                let outcome = ctx.medium.measure(i, Holder::Center, basis, draw)?;
                self.announcements[i] = Some(Announcement::measured(basis, outcome));
                measured += 1;
            }
        }
        ctx.bus.log(Actor::Center, EventKind::Measured { positions: measured });
        self.announce(ctx);
        Ok(())
    }
}

struct UserNode {
    role: Role,
    actor: Actor,
    protocol: ProtocolId,
    num_states: usize,
    check_fraction: f64,
    threshold: f64,
    rng: SimRng,
    bases: Vec<Option<Basis>>,
    outcomes: Vec<Option<Outcome>>,
    measured: bool,
    announcements: Option<Vec<Option<Announcement>>>,
    peer_bases: Option<Vec<Option<Basis>>>,
    kept: Option<Vec<bool>>,
    pending_check: Option<(Vec<usize>, Vec<Outcome>)>,
    check_positions: Vec<usize>,
    check: Option<CheckReport>,
    raw_key: BitString,
}

impl UserNode {
    fn new(role: Role, config: &SessionConfig, rng: SimRng) -> Self {
        UserNode {
            role,
            actor: match role {
                Role::Alice => Actor::Alice,
                Role::Bob => Actor::Bob,
            },
            protocol: config.protocol,
            num_states: config.num_states,
            check_fraction: config.check_fraction,
            threshold: config.qber_abort_threshold,
            rng,
            bases: vec![None; config.num_states],
            outcomes: vec![None; config.num_states],
            measured: false,
            announcements: None,
            peer_bases: None,
            kept: None,
            pending_check: None,
            check_positions: Vec::new(),
            check: None,
            raw_key: BitString::default(),
        }
    }

    fn peer(&self) -> Actor {
        match self.role {
            Role::Alice => Actor::Bob,
            Role::Bob => Actor::Alice,
        }
    }

    fn holder(&self) -> Holder {
        match self.role {
            Role::Alice => Holder::Alice,
            Role::Bob => Holder::Bob,
        }
    }

    fn start(&mut self, ctx: &mut Ctx) -> Result<(), ProtocolError> {
        if self.protocol == ProtocolId::Ghz3 {
            self.measure_all(ctx)?;
            ctx.bus.send(self.actor, Actor::Center, Message::Bases(self.bases.clone()));
            ctx.bus.send(self.actor, self.peer(), Message::Bases(self.bases.clone()));
        }
        Ok(())
    }

    /// Chooses a basis for every position and measures the particles that
    /// arrived. Draws are taken for lost positions too, so loss never
    /// shifts later randomness.
    fn measure_all(&mut self, ctx: &mut Ctx) -> Result<(), ProtocolError> {
        let pool = self.protocol.user_bases();
        let mut count = 0;
        for i in 0..self.num_states {
            let basis = pool[self.rng.random_range(0..pool.len())];
            let draw: f64 = self.rng.random();
            if ctx.medium.has_arrived(i, self.role) {
                self.bases[i] = Some(basis);
                self.outcomes[i] = Some(ctx.medium.measure(i, self.holder(), basis, draw)?);
                count += 1;
            }
        }
        self.measured = true;
        ctx.bus.log(self.actor, EventKind::Measured { positions: count });
        Ok(())
    }

    fn receive(&mut self, _from: Actor, message: Message, ctx: &mut Ctx) -> Result<(), ProtocolError> {
        match message {
            Message::Announcements(ann) => {
                self.announcements = Some(ann);
                if !self.measured {
                    self.measure_all(ctx)?;
                    ctx.bus.send(self.actor, self.peer(), Message::Bases(self.bases.clone()));
                }
                self.try_sift(ctx)?;
            }
            Message::Bases(bases) => {
                self.peer_bases = Some(bases);
                self.try_sift(ctx)?;
            }
            Message::CheckRequest { positions, bob_outcomes } => {
                self.pending_check = Some((positions, bob_outcomes));
                self.try_verify(ctx)?;
            }
            Message::CheckVerdict(report) => {
                self.check = Some(report);
                self.form_key(ctx)?;
            }
        }
        Ok(())
    }

    fn try_sift(&mut self, ctx: &mut Ctx) -> Result<(), ProtocolError> {
        if self.kept.is_some() || !self.measured {
            return Ok(());
        }
        let (Some(ann), Some(peer)) = (&self.announcements, &self.peer_bases) else {
            return Ok(());
        };
        let mut kept = vec![false; self.num_states];
        for (i, slot) in kept.iter_mut().enumerate() {
            if let (Some(a), Some(own), Some(other)) = (ann[i], self.bases[i], peer[i]) {
                let (alice, bob) = match self.role {
                    Role::Alice => (own, other),
                    Role::Bob => (other, own),
                };
                *slot = keep_rule(self.protocol, &a, alice, bob)?;
            }
        }
        let kept_positions: Vec<usize> = (0..self.num_states).filter(|i| kept[*i]).collect();
        ctx.bus.log(self.actor, EventKind::Sifted { kept: kept_positions.len() });
        self.kept = Some(kept);
        match self.role {
            Role::Bob => {
                self.check_positions = select_check_positions(&kept_positions, self.check_fraction, &mut self.rng);
                let bob_outcomes = self
                    .check_positions
                    .iter()
                    .map(|i| self.outcomes[*i].expect("kept positions were measured"))
                    .collect();
                ctx.bus.send(
                    Actor::Bob,
                    Actor::Alice,
                    Message::CheckRequest {
                        positions: self.check_positions.clone(),
                        bob_outcomes,
                    },
                );
            }
            Role::Alice => self.try_verify(ctx)?,
        }
        Ok(())
    }

    /// Alice compares Bob's disclosed outcomes with what her own results
    /// predict and returns the verdict.
    fn try_verify(&mut self, ctx: &mut Ctx) -> Result<(), ProtocolError> {
        if self.kept.is_none() {
            return Ok(());
        }
        let Some((positions, bob_outcomes)) = self.pending_check.take() else {
            return Ok(());
        };
        let mut errors = 0;
        for (&i, bob) in positions.iter().zip(&bob_outcomes) {
            errors += usize::from(self.prediction(i)? != *bob);
        }
        let report = CheckReport::new(positions.len(), errors, self.threshold);
        ctx.bus.log(
            Actor::Alice,
            EventKind::CheckEvaluated {
                checked: report.checked,
                errors,
                aborted: report.aborted,
            },
        );
        self.check_positions = positions;
        self.check = Some(report);
        ctx.bus.send(Actor::Alice, Actor::Bob, Message::CheckVerdict(report));
        self.form_key(ctx)
    }

    /// Alice's value for Bob's outcome at a kept position.
    fn prediction(&self, i: usize) -> Result<Outcome, ProtocolError> {
        let ann = self.announcements.as_ref().and_then(|a| a[i]).ok_or(ProtocolError::NotKeyPosition(i))?;
        let peer = self.peer_bases.as_ref().and_then(|b| b[i]).ok_or(ProtocolError::NotKeyPosition(i))?;
        let (basis, outcome) = self.bases[i].zip(self.outcomes[i]).ok_or(ProtocolError::NotKeyPosition(i))?;
        consistency_map(self.protocol, &ann, basis, outcome, peer)
    }

    fn form_key(&mut self, ctx: &mut Ctx) -> Result<(), ProtocolError> {
        let report = self.check.expect("verdict known");
        let kept = self.kept.as_ref().expect("sifted before the check");
        let mut key = BitString::default();
        if !report.aborted {
            let mut checked = self.check_positions.iter().peekable();
            for i in (0..self.num_states).filter(|i| kept[*i]) {
                if checked.peek() == Some(&&i) {
                    checked.next();
                    continue;
                }
                let bit = match self.role {
                    Role::Bob => self.outcomes[i].expect("kept positions were measured").bit(),
                    Role::Alice => self.prediction(i)?.bit(),
                };
                key.push(bit);
            }
        }
        ctx.bus.log(self.actor, EventKind::KeyFormed { bits: key.len() });
        self.raw_key = key;
        Ok(())
    }
}

fn finish(
    config: &SessionConfig,
    legs: LegLoss,
    mut medium: Medium,
    center: CenterNode,
    alice: UserNode,
    bob: UserNode,
    events: Vec<Event>,
) -> Result<SessionTranscript, ProtocolError> {
    let n = config.num_states;
    let kept = bob.kept.clone().unwrap_or_else(|| vec![false; n]);
    let mut is_check = vec![false; n];
    for &i in &bob.check_positions {
        is_check[i] = true;
    }
    let positions: Vec<PositionRecord> = (0..n)
        .map(|i| PositionRecord {
            index: i,
            lost: !(medium.arrived[i][0] && medium.arrived[i][1]),
            center_announcement: center.announcements[i],
            alice_basis: alice.bases[i],
            alice_outcome: alice.outcomes[i],
            bob_basis: bob.bases[i],
            bob_outcome: bob.outcomes[i],
            kept: kept[i],
            used_for_check: is_check[i],
        })
        .collect();
    let check = alice.check.unwrap_or_else(CheckReport::empty);

    let adversary = if config.attack.is_none() {
        None
    } else {
        let registers = std::mem::take(&mut medium.registers);
        let mut eve = medium.adversary;
        for (i, mut register) in registers.into_iter().enumerate() {
            eve.read_probe(i, &mut register)?;
        }
        let observed = (check.checked > 0).then_some(check.qber);
        Some(eve.finish(config.protocol, &positions, observed)?)
    };

    let distillation = if check.aborted {
        None
    } else {
        Some(distill(
            &alice.raw_key,
            &bob.raw_key,
            check.qber,
            &config.distill,
            derive_seed(config.rng_seed, Stream::Public as u64),
        )?)
    };
    let final_bits = distillation.as_ref().map_or(0, |d| d.final_length);
    Ok(SessionTranscript {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        legs,
        events,
        positions,
        check,
        alice_raw_key: alice.raw_key,
        bob_raw_key: bob.raw_key,
        distillation,
        efficiency_measured: final_bits as f64 / n as f64,
        efficiency_bound: efficiency_bound(config.protocol),
        efficiency_baseline: TIME_RESERVED_BASELINE,
        adversary,
    })
}

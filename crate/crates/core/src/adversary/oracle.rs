//! Exact detection statistics by enumerating every discrete choice and
//! measurement branch with its Born weight.

use serde::{Deserialize, Serialize};

use super::{ancilla_observation, apply_ancilla, guess_score, holder_of, infer_bit, AdversaryError, AttackModel};
use super::{Observation, PublicView};
use crate::protocols::{center_basis_rule_p3, consistency_map, keep_rule, ProtocolError, ProtocolId, Role};
use crate::qstate::{ghz, make_two_qubit, Announcement, Basis, Outcome};
use crate::register::{Holder, Register};

/// Branches lighter than this are dropped as numerical dust.
const NEGLIGIBLE: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisPairPrediction {
    pub alice_basis: Basis,
    pub bob_basis: Basis,
    /// Probability that a position is kept with this basis pair.
    pub kept_probability: f64,
    /// Error probability on kept positions with this basis pair.
    pub error_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub protocol: ProtocolId,
    pub attack: AttackModel,
    /// Probability that a position survives sifting.
    pub kept_probability: f64,
    /// Error probability of a checked (uniformly drawn kept) position.
    pub detection_rate: f64,
    /// Expected score of Eve's key-bit guess on a kept position.
    pub eve_accuracy: f64,
    pub by_bases: Vec<BasisPairPrediction>,
}

#[derive(Clone)]
struct Branch {
    weight: f64,
    register: Register,
    announcement: Option<Announcement>,
    alice: Option<(Basis, Outcome)>,
    bob: Option<(Basis, Outcome)>,
    observation: Option<Observation>,
}

impl Branch {
    fn user(&self, role: Role) -> Option<(Basis, Outcome)> {
        match role {
            Role::Alice => self.alice,
            Role::Bob => self.bob,
        }
    }
}

fn expand<F>(branches: Vec<Branch>, mut step: F) -> Result<Vec<Branch>, AdversaryError>
where
    F: FnMut(Branch) -> Result<Vec<Branch>, AdversaryError>,
{
    let mut out = Vec::new();
    for b in branches {
        out.extend(step(b)?.into_iter().filter(|b| b.weight > NEGLIGIBLE));
    }
    Ok(out)
}

/// Measures `holder` in `basis`, optionally resending the eigenstate found.
fn measure(b: &Branch, holder: Holder, basis: Basis, resend: bool) -> Result<Vec<(Branch, Outcome)>, AdversaryError> {
    let index = b.register.index_of(holder);
    let mut out = Vec::with_capacity(2);
    for (p, outcome, mut register) in b.register.branches(holder, basis)? {
        if resend {
            register.insert(index.expect("measured holder exists"), holder, basis, outcome)?;
        }
        out.push((
            Branch {
                weight: b.weight * p,
                register,
                ..b.clone()
            },
            outcome,
        ));
    }
    Ok(out)
}

fn sources(protocol: ProtocolId) -> Vec<Branch> {
    let blank = |weight, register, announcement| Branch {
        weight,
        register,
        announcement,
        alice: None,
        bob: None,
        observation: None,
    };
    match protocol.pair_labels() {
        None => vec![blank(1.0, Register::new(ghz(), vec![Holder::Center, Holder::Alice, Holder::Bob]), None)],
        Some(labels) => labels
            .into_iter()
            .map(|label| {
                blank(
                    0.25,
                    Register::new(make_two_qubit(label), vec![Holder::Alice, Holder::Bob]),
                    Some(Announcement::Pair(label)),
                )
            })
            .collect(),
    }
}

fn attack(branches: Vec<Branch>, model: &AttackModel) -> Result<Vec<Branch>, AdversaryError> {
    match model {
        AttackModel::None => Ok(branches),
        AttackModel::CheatingCenterMeasureAll { basis } => {
            let basis = *basis;
            let mut branches: Vec<(Branch, Vec<Outcome>)> = branches.into_iter().map(|b| (b, Vec::new())).collect();
            for holder in [Holder::Center, Holder::Alice, Holder::Bob] {
                let mut next = Vec::new();
                for (b, seen) in branches {
                    for (child, outcome) in measure(&b, holder, basis, true)? {
                        let mut seen = seen.clone();
                        seen.push(outcome);
                        next.push((child, seen));
                    }
                }
                branches = next;
            }
            Ok(branches
                .into_iter()
                .map(|(mut b, seen)| {
                    b.observation = Some(Observation::CenterCheat {
                        basis,
                        outcomes: [seen[0], seen[1], seen[2]],
                    });
                    b
                })
                .collect())
        }
        AttackModel::InterceptResend { target, basis_pool } => {
            let target = *target;
            expand(branches, |b| {
                let mut out = Vec::new();
                for basis in basis_pool {
                    for (mut child, outcome) in measure(&b, holder_of(target), *basis, true)? {
                        child.weight /= basis_pool.len() as f64;
                        child.observation = Some(Observation::Intercept {
                            target,
                            basis: *basis,
                            outcome,
                        });
                        out.push(child);
                    }
                }
                Ok(out)
            })
        }
        AttackModel::AncillaEntangle { coupling } => expand(branches, |mut b| {
            apply_ancilla(&mut b.register, *coupling)?;
            Ok(vec![b])
        }),
    }
}

fn center_measures(branches: Vec<Branch>, choose: impl Fn(&Branch) -> Vec<(f64, Basis)>) -> Result<Vec<Branch>, AdversaryError> {
    expand(branches, |b| {
        let mut out = Vec::new();
        for (w, basis) in choose(&b) {
            for (mut child, outcome) in measure(&b, Holder::Center, basis, false)? {
                child.weight *= w;
                child.announcement = Some(Announcement::measured(basis, outcome));
                out.push(child);
            }
        }
        Ok(out)
    })
}

fn users_measure(branches: Vec<Branch>, protocol: ProtocolId) -> Result<Vec<Branch>, AdversaryError> {
    let mut branches = branches;
    for role in [Role::Alice, Role::Bob] {
        branches = expand(branches, |b| {
            let mut out = Vec::new();
            for basis in protocol.user_bases() {
                for (mut child, outcome) in measure(&b, holder_of(role), basis, false)? {
                    child.weight *= 0.5;
                    match role {
                        Role::Alice => child.alice = Some((basis, outcome)),
                        Role::Bob => child.bob = Some((basis, outcome)),
                    }
                    out.push(child);
                }
            }
            Ok(out)
        })?;
    }
    Ok(branches)
}

fn read_probe(branches: Vec<Branch>) -> Result<Vec<Branch>, AdversaryError> {
    expand(branches, |b| {
        if !b.register.holds(Holder::Probe0) {
            return Ok(vec![b]);
        }
        let mut out = Vec::new();
        for (first, p0) in measure(&b, Holder::Probe0, Basis::X, false)? {
            for (mut child, p1) in measure(&first, Holder::Probe1, Basis::X, false)? {
                child.observation = Some(ancilla_observation(p0, p1));
                out.push(child);
            }
        }
        Ok(out)
    })
}

fn protocol_error(err: ProtocolError) -> AdversaryError {
    match err {
        ProtocolError::Adversary(e) => e,
        ProtocolError::State(e) => AdversaryError::State(e),
        other => AdversaryError::InvalidParameter(other.to_string()),
    }
}

/// Exact kept probability, check error rate and Eve's expected guess
/// score for `protocol` under `model` applied to every position.
pub fn predict(protocol: ProtocolId, model: &AttackModel) -> Result<Prediction, AdversaryError> {
    model.validate()?;
    model.supports(protocol)?;
    let mut branches = attack(sources(protocol), model)?;
    branches = match protocol {
        ProtocolId::Ghz1 => users_measure(center_measures(branches, |_| vec![(1.0, Basis::X)])?, protocol)?,
        ProtocolId::Ghz2 => users_measure(
            center_measures(branches, |_| vec![(0.5, Basis::X), (0.5, Basis::Y)])?,
            protocol,
        )?,
        ProtocolId::Ghz3 => {
            let measured = users_measure(branches, protocol)?;
            center_measures(measured, |b| {
                let (a, _) = b.user(Role::Alice).expect("Alice measured");
                let (c, _) = b.user(Role::Bob).expect("Bob measured");
                vec![(1.0, center_basis_rule_p3(a, c).expect("user bases are x or y"))]
            })?
        }
        ProtocolId::Bell4 | ProtocolId::Bell5 => users_measure(branches, protocol)?,
    };
    branches = read_probe(branches)?;

    let bases = protocol.user_bases();
    let mut kept = 0.0;
    let mut errors = 0.0;
    let mut score = 0.0;
    let mut pair_kept = [[0.0f64; 2]; 2];
    let mut pair_errors = [[0.0f64; 2]; 2];
    for b in &branches {
        let (ann, (ab, ao), (bb, bo)) = (
            b.announcement.expect("every leaf carries an announcement"),
            b.alice.expect("Alice measured"),
            b.bob.expect("Bob measured"),
        );
        if !keep_rule(protocol, &ann, ab, bb).map_err(protocol_error)? {
            continue;
        }
        let predicted = consistency_map(protocol, &ann, ab, ao, bb).map_err(protocol_error)?;
        let (ia, ib) = (
            bases.iter().position(|x| *x == ab).expect("user basis"),
            bases.iter().position(|x| *x == bb).expect("user basis"),
        );
        kept += b.weight;
        pair_kept[ia][ib] += b.weight;
        if predicted != bo {
            errors += b.weight;
            pair_errors[ia][ib] += b.weight;
        }
        let public = PublicView {
            announcement: Some(ann),
            alice_basis: Some(ab),
            bob_basis: Some(bb),
        };
        let guess = b.observation.and_then(|o| infer_bit(protocol, &o, &public));
        score += b.weight * guess_score(guess, bo.bit());
    }

    let mut by_bases = Vec::new();
    for (ia, alice_basis) in bases.into_iter().enumerate() {
        for (ib, bob_basis) in bases.into_iter().enumerate() {
            if pair_kept[ia][ib] > 0.0 {
                by_bases.push(BasisPairPrediction {
                    alice_basis,
                    bob_basis,
                    kept_probability: pair_kept[ia][ib],
                    error_rate: pair_errors[ia][ib] / pair_kept[ia][ib],
                });
            }
        }
    }
    Ok(Prediction {
        protocol,
        attack: model.clone(),
        kept_probability: kept,
        detection_rate: if kept > 0.0 { errors / kept } else { 0.0 },
        eve_accuracy: if kept > 0.0 { score / kept } else { 0.5 },
        by_bases,
    })
}

/// Error probability of a checked position when `model` hits every position.
pub fn predict_detection_rate(protocol: ProtocolId, model: &AttackModel) -> Result<f64, AdversaryError> {
    Ok(predict(protocol, model)?.detection_rate)
}

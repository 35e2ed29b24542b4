use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{predict_detection_rate, AdversaryError, AttackModel};
use crate::protocols::ProtocolId;
use crate::qstate::{Basis, Outcome, QStateError, StateVector};
use crate::register::{Holder, Register};

use Outcome::{Minus, Plus};

/// x values of (Alice, Bob) that select probe states A1..A4.
pub(crate) const BRANCH_ORDER: [(Outcome, Outcome); 4] = [(Plus, Plus), (Minus, Minus), (Plus, Minus), (Minus, Plus)];

/// Projection weights `α = (½, ½, ½, ½)`.
pub const EQUAL_ALPHA: [Complex64; 4] = [Complex64::new(0.5, 0.0); 4];

fn check_coupling(coupling: f64) -> Result<(), AdversaryError> {
    if (0.0..=1.0).contains(&coupling) {
        Ok(())
    } else {
        Err(AdversaryError::InvalidParameter(format!("coupling {coupling} is not in [0, 1]")))
    }
}

/// Probe states `A_i = Σ_k √λ_k h_k[i] |k⟩` with `λ = (4 − 3κ, κ, κ, κ)` and
/// `h_k[i] = (−1)^{k·i} / 2`, so that `⟨A_i|A_j⟩ = 1 − κ` for `i ≠ j`.
/// At κ = 1 the states are the x-basis products `|x±x±⟩`.
pub fn ancilla_states(coupling: f64) -> Result<[StateVector; 4], AdversaryError> {
    check_coupling(coupling)?;
    let lambda = [4.0 - 3.0 * coupling, coupling, coupling, coupling];
    Ok(std::array::from_fn(|i| {
        let amps = (0..4)
            .map(|k: usize| {
                let sign = if (k & i).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
                Complex64::new(lambda[k].sqrt() * sign / 2.0, 0.0)
            })
            .collect();
        StateVector::from_raw(amps)
    }))
}

/// Appends a two-qubit probe whose state depends on the x values of the
/// qubits at `alice` and `bob`.
fn attach_probe(state: &StateVector, alice: usize, bob: usize, coupling: f64) -> Result<StateVector, AdversaryError> {
    let probes = ancilla_states(coupling)?;
    let mut joint: Option<StateVector> = None;
    for ((a, b), probe) in BRANCH_ORDER.into_iter().zip(&probes) {
        let part = state
            .project_in_place(alice, Basis::X, a)
            .project_in_place(bob, Basis::X, b)
            .tensor(probe)?;
        joint = Some(match joint {
            None => part,
            Some(sum) => sum.added(&part),
        });
    }
    Ok(joint.expect("four branches"))
}

/// Entangles the probe with Alice's and Bob's particles inside a register.
pub fn apply_ancilla(register: &mut Register, coupling: f64) -> Result<(), AdversaryError> {
    let missing = |h: Holder| QStateError::MissingHolder(format!("{h:?}"));
    let alice = register.index_of(Holder::Alice).ok_or_else(|| missing(Holder::Alice))?;
    let bob = register.index_of(Holder::Bob).ok_or_else(|| missing(Holder::Bob))?;
    let joint = attach_probe(register.state(), alice, bob, coupling)?;
    let mut holders = register.holders().to_vec();
    holders.extend([Holder::Probe0, Holder::Probe1]);
    register.replace_state(joint, holders);
    Ok(())
}

/// Five-qubit state (center, Alice, Bob, probe, probe) after the probe
/// interaction on a three-qubit state.
pub fn ancilla_attack(ghz: &StateVector, coupling: f64) -> Result<StateVector, AdversaryError> {
    if ghz.num_qubits() != 3 {
        return Err(QStateError::InvalidQubitCount(ghz.num_qubits()).into());
    }
    attach_probe(ghz, 1, 2, coupling)
}

/// Projects Alice's and Bob's qubits of a five-qubit joint state onto
/// `Σ α_i |x_{a_i} x_{b_i}⟩`. The result lives on (center, probe, probe)
/// and is unnormalized; its squared norm is the projection probability.
///
/// For a GHZ source it equals
/// `½(|x+⟩ ⊗ (α1* A1 + α2* A2) + |x−⟩ ⊗ (α3* A3 + α4* A4))`.
pub fn eve_projection(joint: &StateVector, alpha: [Complex64; 4]) -> Result<StateVector, AdversaryError> {
    if joint.num_qubits() != 5 {
        return Err(QStateError::InvalidQubitCount(joint.num_qubits()).into());
    }
    let norm: f64 = alpha.iter().map(Complex64::norm_sqr).sum();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(AdversaryError::UnnormalizedAlpha(norm));
    }
    let mut out: Option<StateVector> = None;
    for ((a, b), weight) in BRANCH_ORDER.into_iter().zip(alpha) {
        let part = joint.contract(1, Basis::X, a).contract(1, Basis::X, b).scaled(weight.conj());
        out = Some(match out {
            None => part,
            Some(sum) => sum.added(&part),
        });
    }
    Ok(out.expect("four branches"))
}

/// Reduced density matrix of the last two qubits.
fn probe_density(state: &StateVector) -> DMatrix<Complex64> {
    let amps = state.amplitudes();
    let rest = amps.len() / 4;
    DMatrix::from_fn(4, 4, |i, j| (0..rest).map(|r| amps[r * 4 + i] * amps[r * 4 + j].conj()).sum())
}

/// Optimal probability of telling two weighted states apart. The weights
/// are carried by the traces, which should sum to one.
pub fn helstrom_guess(first: &DMatrix<Complex64>, second: &DMatrix<Complex64>) -> f64 {
    let diff = first - second;
    let trace_norm: f64 = diff.symmetric_eigen().eigenvalues.iter().map(|v| v.abs()).sum();
    0.5 * (first.trace().re + second.trace().re + trace_norm)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AncillaReport {
    pub coupling: f64,
    /// Probability that Eve's projection succeeds.
    pub projection_probability: f64,
    /// Eve's best guess of Alice's x outcome after her projection.
    pub eve_guess_probability: f64,
    /// Eve's best guess, from the probe, of which x branch the center's
    /// particle took after the projection.
    pub center_branch_guess: f64,
    /// Eve's best guess of Bob's x outcome at an x–x position, without
    /// any projection.
    pub key_guess_unprojected_xx: f64,
    /// Error rate the probe induces on checked positions.
    pub disturbance: f64,
}

/// Information and disturbance figures for the probe attack on `protocol`.
pub fn analyze_ancilla(protocol: ProtocolId, coupling: f64, alpha: [Complex64; 4]) -> Result<AncillaReport, AdversaryError> {
    let joint = ancilla_attack(&crate::qstate::ghz(), coupling)?;
    let residual = eve_projection(&joint, alpha)?;
    let projection_probability = residual.norm_sqr();
    let residual = residual
        .normalized()
        .ok_or(AdversaryError::InvalidParameter("projection has zero probability".into()))?;

    // after the projection the users' pair is exactly φ, so the full state is φ ⊗ residual
    let phi = BRANCH_ORDER
        .into_iter()
        .zip(alpha)
        .map(|((a, b), w)| {
            let pair = StateVector::from_raw(Basis::X.eigenvector(a).to_vec())
                .tensor(&StateVector::from_raw(Basis::X.eigenvector(b).to_vec()))
                .expect("two single qubits");
            pair.scaled(w)
        })
        .reduce(|acc, s| acc.added(&s))
        .expect("four branches");
    let post = phi.tensor(&residual)?;
    let eve_guess_probability = helstrom_guess(
        &probe_density(&post.contract(0, Basis::X, Plus)),
        &probe_density(&post.contract(0, Basis::X, Minus)),
    );
    let center_branch_guess = helstrom_guess(
        &probe_density(&residual.contract(0, Basis::X, Plus)),
        &probe_density(&residual.contract(0, Basis::X, Minus)),
    );

    let centered = joint.contract(0, Basis::X, Plus);
    let weight = centered.norm_sqr();
    let bob_plus = probe_density(&centered.contract(1, Basis::X, Plus)) / Complex64::new(weight, 0.0);
    let bob_minus = probe_density(&centered.contract(1, Basis::X, Minus)) / Complex64::new(weight, 0.0);
    let key_guess_unprojected_xx = helstrom_guess(&bob_plus, &bob_minus);

    Ok(AncillaReport {
        coupling,
        projection_probability,
        eve_guess_probability,
        center_branch_guess,
        key_guess_unprojected_xx,
        disturbance: predict_detection_rate(protocol, &AttackModel::AncillaEntangle { coupling })?,
    })
}

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Basis, Outcome, QStateError, StateVector};

/// Relative sign between the two branches of a cat state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RelativeSign {
    Plus,
    Minus,
}

/// The two-qubit states a center can hand to Alice and Bob.
///
/// `PsiPlus..PhiMinus` use this project's naming in which `Ψ±` are the
/// `z+z+ ± z−z−` pair and `Φ±` the `z+z− ± z−z+` pair. The two `Comb*`
/// states are equal-weight combinations of `Ψ−` and `Φ+`. `CombPhiMinus` is
/// also written `ψ−` in some texts; the name here follows its x/z expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TwoQubitLabel {
    PsiPlus,
    PsiMinus,
    PhiPlus,
    PhiMinus,
    CombPsiPlus,
    CombPhiMinus,
}

impl TwoQubitLabel {
    pub const ALL: [TwoQubitLabel; 6] = [
        TwoQubitLabel::PsiPlus,
        TwoQubitLabel::PsiMinus,
        TwoQubitLabel::PhiPlus,
        TwoQubitLabel::PhiMinus,
        TwoQubitLabel::CombPsiPlus,
        TwoQubitLabel::CombPhiMinus,
    ];

    /// Greek-letter label for rendered tables.
    pub fn symbol(self) -> &'static str {
        match self {
            TwoQubitLabel::PsiPlus => "Ψ+",
            TwoQubitLabel::PsiMinus => "Ψ-",
            TwoQubitLabel::PhiPlus => "Φ+",
            TwoQubitLabel::PhiMinus => "Φ-",
            TwoQubitLabel::CombPsiPlus => "ψ+",
            TwoQubitLabel::CombPhiMinus => "φ-",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TwoQubitLabel::PsiPlus => "PsiPlus",
            TwoQubitLabel::PsiMinus => "PsiMinus",
            TwoQubitLabel::PhiPlus => "PhiPlus",
            TwoQubitLabel::PhiMinus => "PhiMinus",
            TwoQubitLabel::CombPsiPlus => "CombPsiPlus",
            TwoQubitLabel::CombPhiMinus => "CombPhiMinus",
        }
    }
}

impl fmt::Display for TwoQubitLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Single-qubit eigenstate of `basis` with the given sign.
pub fn make_eigenstate(basis: Basis, sign: Outcome) -> StateVector {
    StateVector::from_raw(basis.eigenvector(sign).to_vec())
}

/// `(|z+⟩^⊗n ± |z−⟩^⊗n)/√2` for `2 ≤ n ≤ 4`.
pub fn make_cat(n: usize, sign: RelativeSign) -> Result<StateVector, QStateError> {
    if !(2..=4).contains(&n) {
        return Err(QStateError::InvalidQubitCount(n));
    }
    let mut amplitudes = vec![real(0.0); 1 << n];
    amplitudes[0] = real(FRAC_1_SQRT_2);
    amplitudes[(1 << n) - 1] = real(match sign {
        RelativeSign::Plus => FRAC_1_SQRT_2,
        RelativeSign::Minus => -FRAC_1_SQRT_2,
    });
    Ok(StateVector::from_raw(amplitudes))
}

/// The three-party GHZ state, qubits ordered center, Alice, Bob.
pub fn ghz() -> StateVector {
    make_cat(3, RelativeSign::Plus).expect("n = 3 is in range")
}

fn bell(label: TwoQubitLabel) -> StateVector {
    let h = FRAC_1_SQRT_2;
    let amps = match label {
        TwoQubitLabel::PsiPlus => [h, 0.0, 0.0, h],
        TwoQubitLabel::PsiMinus => [h, 0.0, 0.0, -h],
        TwoQubitLabel::PhiPlus => [0.0, h, h, 0.0],
        TwoQubitLabel::PhiMinus => [0.0, h, -h, 0.0],
        _ => unreachable!("combination states are built from Bell states"),
    };
    StateVector::from_raw(amps.iter().copied().map(real).collect())
}

/// Constructs one of the labelled two-qubit states.
pub fn make_two_qubit(label: TwoQubitLabel) -> StateVector {
    match label {
        TwoQubitLabel::CombPsiPlus => bell(TwoQubitLabel::PsiMinus)
            .added(&bell(TwoQubitLabel::PhiPlus))
            .scaled(real(FRAC_1_SQRT_2)),
        TwoQubitLabel::CombPhiMinus => bell(TwoQubitLabel::PsiMinus)
            .added(&bell(TwoQubitLabel::PhiPlus).scaled(real(-1.0)))
            .scaled(real(FRAC_1_SQRT_2)),
        other => bell(other),
    }
}

/// `(|a₁⟩|b₁⟩ + s·|a₂⟩|b₂⟩)/√2` built from single-qubit eigenstates.
///
/// Used to restate pair states in mixed bases.
pub fn pair_superposition(
    first: [(Basis, Outcome); 2],
    second: [(Basis, Outcome); 2],
    relative: RelativeSign,
) -> StateVector {
    let term = |[(ba, oa), (bb, ob)]: [(Basis, Outcome); 2]| {
        make_eigenstate(ba, oa)
            .tensor(&make_eigenstate(bb, ob))
            .expect("two qubits")
    };
    let s = match relative {
        RelativeSign::Plus => 1.0,
        RelativeSign::Minus => -1.0,
    };
    term(first)
        .added(&term(second).scaled(real(s)))
        .scaled(real(FRAC_1_SQRT_2))
}

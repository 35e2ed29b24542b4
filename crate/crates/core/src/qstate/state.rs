use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::QStateError;

/// Complex amplitude of a basis string.
pub type Amplitude = Complex64;

/// Largest register the simulator will hold.
///
/// Protocol states never exceed four qubits; the fifth slot exists for the
/// two-qubit ancilla probe attached to a GHZ triplet.
pub const MAX_QUBITS: usize = 5;

/// Tolerance for all state comparisons.
pub const TOLERANCE: f64 = 1e-12;

/// Measurement axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Basis {
    X,
    Y,
    Z,
}

impl Basis {
    pub const ALL: [Basis; 3] = [Basis::X, Basis::Y, Basis::Z];

    /// Lowercase axis letter, as used in ket labels.
    pub fn letter(self) -> char {
        match self {
            Basis::X => 'x',
            Basis::Y => 'y',
            Basis::Z => 'z',
        }
    }

    /// Single-qubit eigenvector `[⟨z+|e⟩, ⟨z−|e⟩]` for the given sign.
    pub fn eigenvector(self, sign: Outcome) -> [Amplitude; 2] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = match sign {
            Outcome::Plus => 1.0,
            Outcome::Minus => -1.0,
        };
        match self {
            Basis::Z => match sign {
                Outcome::Plus => [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
                Outcome::Minus => [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
            },
            Basis::X => [Complex64::new(h, 0.0), Complex64::new(s * h, 0.0)],
            Basis::Y => [Complex64::new(h, 0.0), Complex64::new(0.0, s * h)],
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// Binary measurement result, the ± of an eigenstate label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub const ALL: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    /// Key-bit convention: Plus → 0, Minus → 1.
    pub fn bit(self) -> u8 {
        match self {
            Outcome::Plus => 0,
            Outcome::Minus => 1,
        }
    }

    pub fn from_bit(bit: u8) -> Self {
        if bit & 1 == 0 {
            Outcome::Plus
        } else {
            Outcome::Minus
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Outcome::Plus => Outcome::Minus,
            Outcome::Minus => Outcome::Plus,
        }
    }

    pub fn sign_char(self) -> char {
        match self {
            Outcome::Plus => '+',
            Outcome::Minus => '-',
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.sign_char())
    }
}

/// Pure state of up to [`MAX_QUBITS`] qubits in the computational basis.
///
/// Index bit order: qubit 0 is the leftmost tensor factor and therefore the
/// most significant bit of an amplitude index. Bit value 0 is `|z+⟩`.
/// A zero-qubit state (a single amplitude of 1) marks a fully measured system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: Vec<Amplitude>,
}

impl StateVector {
    /// Builds a state from explicit amplitudes, checking length and norm.
    pub fn new(amplitudes: Vec<Amplitude>) -> Result<Self, QStateError> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() || len > (1 << MAX_QUBITS) {
            return Err(QStateError::InvalidLength(len));
        }
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(QStateError::NonFinite);
        }
        let state = Self::from_raw(amplitudes);
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > TOLERANCE {
            return Err(QStateError::NotNormalized(norm));
        }
        Ok(state)
    }

    /// No-checks constructor for internal arithmetic.
    pub(crate) fn from_raw(amplitudes: Vec<Amplitude>) -> Self {
        debug_assert!(amplitudes.len().is_power_of_two());
        let num_qubits = amplitudes.len().trailing_zeros() as usize;
        StateVector {
            num_qubits,
            amplitudes,
        }
    }

    /// The empty marker left behind once every qubit has been measured.
    pub fn empty() -> Self {
        StateVector {
            num_qubits: 0,
            amplitudes: vec![Complex64::new(1.0, 0.0)],
        }
    }

    /// `|z+⟩^⊗n`.
    pub fn zeros(num_qubits: usize) -> Result<Self, QStateError> {
        if num_qubits == 0 || num_qubits > MAX_QUBITS {
            return Err(QStateError::InvalidQubitCount(num_qubits));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self::from_raw(amplitudes))
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn is_empty(&self) -> bool {
        self.num_qubits == 0
    }

    pub fn amplitudes(&self) -> &[Amplitude] {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> Amplitude {
        self.amplitudes[index]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Rescales to unit norm. Returns `None` for the zero vector.
    pub(crate) fn normalized(mut self) -> Option<Self> {
        let norm = self.norm_sqr();
        if norm <= f64::MIN_POSITIVE {
            return None;
        }
        let scale = 1.0 / norm.sqrt();
        for a in &mut self.amplitudes {
            *a *= scale;
        }
        Some(self)
    }

    pub(crate) fn scaled(mut self, factor: Amplitude) -> Self {
        for a in &mut self.amplitudes {
            *a *= factor;
        }
        self
    }

    /// Amplitude-wise sum; both operands must have equal size.
    pub(crate) fn added(mut self, other: &StateVector) -> Self {
        debug_assert_eq!(self.num_qubits, other.num_qubits);
        for (a, b) in self.amplitudes.iter_mut().zip(&other.amplitudes) {
            *a += b;
        }
        self
    }

    /// `self ⊗ other`, with `self` on the left (lower qubit indices).
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector, QStateError> {
        let n = self.num_qubits + other.num_qubits;
        if n > MAX_QUBITS {
            return Err(QStateError::InvalidQubitCount(n));
        }
        let mut amplitudes = Vec::with_capacity(self.amplitudes.len() * other.amplitudes.len());
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                amplitudes.push(a * b);
            }
        }
        Ok(StateVector {
            num_qubits: n,
            amplitudes,
        })
    }

    /// Hermitian inner product `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<Amplitude, QStateError> {
        if self.num_qubits != other.num_qubits {
            return Err(QStateError::DimensionMismatch {
                left: self.num_qubits,
                right: other.num_qubits,
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Amplitude-wise equality within `tol`.
    pub fn approx_eq(&self, other: &StateVector, tol: f64) -> bool {
        self.num_qubits == other.num_qubits
            && self
                .amplitudes
                .iter()
                .zip(&other.amplitudes)
                .all(|(a, b)| (a - b).norm() <= tol)
    }

    /// Equality up to a global phase, judged by `|⟨a|b⟩| = 1`.
    pub fn approx_eq_up_to_phase(&self, other: &StateVector, tol: f64) -> bool {
        match self.inner(other) {
            Ok(ip) => (ip.norm() - 1.0).abs() <= tol,
            Err(_) => false,
        }
    }

    fn check_qubit(&self, qubit: usize) -> Result<(), QStateError> {
        if qubit >= self.num_qubits {
            return Err(QStateError::QubitOutOfRange {
                index: qubit,
                num_qubits: self.num_qubits,
            });
        }
        Ok(())
    }

    /// Bit mask of `qubit` inside an amplitude index.
    fn mask(&self, qubit: usize) -> usize {
        1 << (self.num_qubits - 1 - qubit)
    }

    /// Contracts `qubit` with `⟨e|` for the eigenvector of `(basis, sign)`,
    /// removing that qubit. The result is unnormalized; its squared norm is
    /// the Born probability of the outcome.
    pub(crate) fn contract(&self, qubit: usize, basis: Basis, sign: Outcome) -> StateVector {
        let e = basis.eigenvector(sign);
        let n_rest = self.num_qubits - 1;
        let low_bits = self.num_qubits - 1 - qubit;
        let low_mask = (1usize << low_bits) - 1;
        let bit = self.mask(qubit);
        let mut out = vec![Complex64::new(0.0, 0.0); 1 << n_rest];
        for (r, slot) in out.iter_mut().enumerate() {
            let high = (r & !low_mask) << 1;
            let base = high | (r & low_mask);
            *slot = e[0].conj() * self.amplitudes[base] + e[1].conj() * self.amplitudes[base | bit];
        }
        StateVector {
            num_qubits: n_rest,
            amplitudes: out,
        }
    }

    /// Applies the rank-one projector `|e⟩⟨e|` on `qubit`, keeping the qubit.
    pub(crate) fn project_in_place(&self, qubit: usize, basis: Basis, sign: Outcome) -> StateVector {
        let rest = self.contract(qubit, basis, sign);
        let single = StateVector::from_raw(basis.eigenvector(sign).to_vec());
        rest.insert_qubit(qubit, &single)
            .expect("projection keeps the register size")
    }

    /// Inserts a single-qubit state so that it becomes qubit `index`.
    pub fn insert_qubit(&self, index: usize, single: &StateVector) -> Result<StateVector, QStateError> {
        if single.num_qubits != 1 {
            return Err(QStateError::InvalidQubitCount(single.num_qubits));
        }
        if index > self.num_qubits {
            return Err(QStateError::QubitOutOfRange {
                index,
                num_qubits: self.num_qubits + 1,
            });
        }
        let n = self.num_qubits + 1;
        if n > MAX_QUBITS {
            return Err(QStateError::InvalidQubitCount(n));
        }
        let low_bits = self.num_qubits - index;
        let low_mask = (1usize << low_bits) - 1;
        let mut out = vec![Complex64::new(0.0, 0.0); 1 << n];
        for (r, a) in self.amplitudes.iter().enumerate() {
            let base = ((r & !low_mask) << 1) | (r & low_mask);
            out[base] = a * single.amplitudes[0];
            out[base | (1 << low_bits)] = a * single.amplitudes[1];
        }
        Ok(StateVector {
            num_qubits: n,
            amplitudes: out,
        })
    }

    /// Born probabilities `(p_plus, p_minus)` for measuring `qubit` in `basis`.
    pub fn outcome_distribution(&self, qubit: usize, basis: Basis) -> Result<(f64, f64), QStateError> {
        self.check_qubit(qubit)?;
        let p_plus = self.contract(qubit, basis, Outcome::Plus).norm_sqr();
        let p_minus = self.contract(qubit, basis, Outcome::Minus).norm_sqr();
        Ok((p_plus, p_minus))
    }

    /// Probability of `sign` and the renormalized post-measurement state with
    /// `qubit` removed (`None` when the branch has zero weight).
    pub fn branch(
        &self,
        qubit: usize,
        basis: Basis,
        sign: Outcome,
    ) -> Result<(f64, Option<StateVector>), QStateError> {
        self.check_qubit(qubit)?;
        let rest = self.contract(qubit, basis, sign);
        let p = rest.norm_sqr();
        Ok((p, rest.normalized()))
    }

    /// Projective measurement driven by an external uniform draw in `[0, 1)`.
    ///
    /// The outcome is `Plus` iff `draw < p_plus`. The measured qubit is removed
    /// from the returned state; measuring the last qubit yields [`StateVector::empty`].
    pub fn measure(
        &self,
        qubit: usize,
        basis: Basis,
        draw: f64,
    ) -> Result<(Outcome, StateVector), QStateError> {
        let (p_plus, _) = self.outcome_distribution(qubit, basis)?;
        let outcome = if draw < p_plus {
            Outcome::Plus
        } else {
            Outcome::Minus
        };
        let collapsed = self
            .contract(qubit, basis, outcome)
            .normalized()
            .expect("a zero-probability branch is never selected");
        Ok((outcome, collapsed))
    }
}

/// Free-function form of [`StateVector::inner`].
pub fn inner_product(a: &StateVector, b: &StateVector) -> Result<Amplitude, QStateError> {
    a.inner(b)
}

/// Free-function form of [`StateVector::outcome_distribution`].
pub fn outcome_distribution(
    state: &StateVector,
    qubit: usize,
    basis: Basis,
) -> Result<(f64, f64), QStateError> {
    state.outcome_distribution(qubit, basis)
}

/// Free-function form of [`StateVector::measure`].
pub fn measure(
    state: &StateVector,
    qubit: usize,
    basis: Basis,
    draw: f64,
) -> Result<(Outcome, StateVector), QStateError> {
    state.measure(qubit, basis, draw)
}

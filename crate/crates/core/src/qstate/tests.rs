use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use proptest::prelude::*;

use super::*;

use Basis::{X, Y, Z};
use Outcome::{Minus, Plus};

fn pair(first: [(Basis, Outcome); 2], second: [(Basis, Outcome); 2]) -> StateVector {
    pair_superposition(first, second, RelativeSign::Plus)
}

#[test]
fn distribution_examples() {
    let (p, m) = ghz().outcome_distribution(0, X).unwrap();
    assert!((p - 0.5).abs() < TOLERANCE && (m - 0.5).abs() < TOLERANCE);

    let z_plus = make_eigenstate(Z, Plus)
        .tensor(&make_two_qubit(TwoQubitLabel::PhiMinus))
        .unwrap();
    let (p, m) = z_plus.outcome_distribution(0, Z).unwrap();
    assert!((p - 1.0).abs() < TOLERANCE && m.abs() < TOLERANCE);

    let (p, m) = make_two_qubit(TwoQubitLabel::PsiMinus)
        .outcome_distribution(0, X)
        .unwrap();
    assert!((p - 0.5).abs() < TOLERANCE && (m - 0.5).abs() < TOLERANCE);
}

#[test]
fn distribution_rejects_bad_index() {
    let err = ghz().outcome_distribution(3, X).unwrap_err();
    assert_eq!(err, QStateError::QubitOutOfRange { index: 3, num_qubits: 3 });
}

#[test]
fn inner_product_examples() {
    let psi_plus = make_two_qubit(TwoQubitLabel::PsiPlus);
    assert!((inner_product(&psi_plus, &psi_plus).unwrap() - Complex64::new(1.0, 0.0)).norm() < TOLERANCE);
    let ip = inner_product(
        &make_two_qubit(TwoQubitLabel::PsiMinus),
        &make_two_qubit(TwoQubitLabel::PhiPlus),
    )
    .unwrap();
    assert!(ip.norm() < TOLERANCE);
    let ip = inner_product(
        &make_two_qubit(TwoQubitLabel::PsiMinus),
        &make_two_qubit(TwoQubitLabel::CombPsiPlus),
    )
    .unwrap();
    assert!((ip - Complex64::new(FRAC_1_SQRT_2, 0.0)).norm() < TOLERANCE);
    assert!(matches!(
        inner_product(&ghz(), &psi_plus),
        Err(QStateError::DimensionMismatch { left: 3, right: 2 })
    ));
}

#[test]
fn measure_ghz_center_x_plus() {
    // draw 0 selects Plus whenever p_plus > 0
    let (o, collapsed) = ghz().measure(0, X, 0.0).unwrap();
    assert_eq!(o, Plus);
    let expected = pair([(X, Plus), (X, Plus)], [(X, Minus), (X, Minus)]);
    assert!(collapsed.approx_eq(&expected, TOLERANCE));
}

#[test]
fn measure_ghz_center_y_minus() {
    let (o, collapsed) = ghz().measure(0, Y, 0.999).unwrap();
    assert_eq!(o, Minus);
    let (p, bob) = collapsed.branch(0, Y, Plus).unwrap();
    assert!((p - 0.5).abs() < TOLERANCE);
    let (p_plus, _) = bob.unwrap().outcome_distribution(0, X).unwrap();
    assert!((p_plus - 1.0).abs() < TOLERANCE);
}

#[test]
fn measure_single_qubit_leaves_empty_marker() {
    let (o, rest) = make_eigenstate(Z, Plus).measure(0, Z, 0.999_999).unwrap();
    assert_eq!(o, Plus);
    assert!(rest.is_empty());
    assert_eq!(rest.num_qubits(), 0);
}

#[test]
fn measure_is_deterministic_in_draw() {
    for draw in [0.0, 0.25, 0.4999, 0.5, 0.75] {
        let a = ghz().measure(1, Y, draw).unwrap();
        let b = ghz().measure(1, Y, draw).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }
}

#[test]
fn bell_states_in_x_basis() {
    use TwoQubitLabel::*;
    let cases = [
        (PsiPlus, pair([(X, Plus), (X, Plus)], [(X, Minus), (X, Minus)])),
        (PsiMinus, pair([(X, Plus), (X, Minus)], [(X, Minus), (X, Plus)])),
        (
            PhiPlus,
            pair_superposition([(X, Plus), (X, Plus)], [(X, Minus), (X, Minus)], RelativeSign::Minus),
        ),
        (
            PhiMinus,
            pair_superposition([(X, Minus), (X, Plus)], [(X, Plus), (X, Minus)], RelativeSign::Minus),
        ),
    ];
    for (label, expanded) in cases {
        assert!(
            make_two_qubit(label).approx_eq(&expanded, TOLERANCE),
            "{label} differs from its x-basis expansion"
        );
    }
}

/// Pair states left after the center measures its GHZ particle, written in
/// the eigenbasis pair that makes the Alice–Bob correlation explicit.
#[test]
fn ghz_decompositions() {
    let g = ghz();
    let collapse = |basis, outcome| g.branch(0, basis, outcome).unwrap().1.unwrap();

    // x-basis decomposition, exact including phase
    assert!(collapse(X, Plus).approx_eq(&pair([(X, Plus), (X, Plus)], [(X, Minus), (X, Minus)]), TOLERANCE));
    assert!(collapse(X, Minus).approx_eq(&pair([(X, Plus), (X, Minus)], [(X, Minus), (X, Plus)]), TOLERANCE));

    // y-basis forms of the x-branch pairs
    assert!(collapse(X, Plus).approx_eq_up_to_phase(&pair([(Y, Plus), (Y, Minus)], [(Y, Minus), (Y, Plus)]), TOLERANCE));
    assert!(collapse(X, Minus).approx_eq_up_to_phase(&pair([(Y, Plus), (Y, Plus)], [(Y, Minus), (Y, Minus)]), TOLERANCE));

    // y-branch pairs, both mixed orderings
    assert!(collapse(Y, Plus).approx_eq_up_to_phase(&pair([(Y, Plus), (X, Minus)], [(Y, Minus), (X, Plus)]), TOLERANCE));
    assert!(collapse(Y, Minus).approx_eq_up_to_phase(&pair([(Y, Plus), (X, Plus)], [(Y, Minus), (X, Minus)]), TOLERANCE));
    assert!(collapse(Y, Plus).approx_eq_up_to_phase(&pair([(X, Plus), (Y, Minus)], [(X, Minus), (Y, Plus)]), TOLERANCE));
    assert!(collapse(Y, Minus).approx_eq_up_to_phase(&pair([(X, Plus), (Y, Plus)], [(X, Minus), (Y, Minus)]), TOLERANCE));
}

#[test]
fn table_reproduction_counts() {
    assert_eq!(derive_correlation_table(TableScenario::BellTableI).matches(), 16);
    assert_eq!(derive_correlation_table(TableScenario::MixedTableII).matches(), 16);
    let ghz_table = derive_correlation_table(TableScenario::GhzTableIII);
    assert_eq!(ghz_table.matches(), 15);
    assert!(ghz_table.entries.iter().all(|e| e.deterministic));
}

#[test]
fn new_validates_input() {
    assert!(matches!(
        StateVector::new(vec![Complex64::new(1.0, 0.0); 3]),
        Err(QStateError::InvalidLength(3))
    ));
    assert!(matches!(
        StateVector::new(vec![Complex64::new(1.0, 0.0); 2]),
        Err(QStateError::NotNormalized(_))
    ));
    assert!(matches!(
        StateVector::new(vec![Complex64::new(f64::NAN, 0.0), Complex64::new(0.0, 0.0)]),
        Err(QStateError::NonFinite)
    ));
}

#[test]
fn insert_then_contract_roundtrip() {
    let g = ghz();
    let probe = make_eigenstate(Y, Minus);
    for index in 0..=3 {
        let bigger = g.insert_qubit(index, &probe).unwrap();
        let (p, rest) = bigger.branch(index, Y, Minus).unwrap();
        assert!((p - 1.0).abs() < TOLERANCE);
        assert!(rest.unwrap().approx_eq(&g, TOLERANCE));
    }
}

fn arb_state() -> impl Strategy<Value = StateVector> {
    (1usize..=4).prop_flat_map(|n| {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1 << n).prop_filter_map(
            "nonzero vector",
            |parts| {
                let amps: Vec<Complex64> = parts.into_iter().map(|(re, im)| Complex64::new(re, im)).collect();
                StateVector::from_raw(amps).normalized()
            },
        )
    })
}

fn arb_basis() -> impl Strategy<Value = Basis> {
    prop_oneof![Just(X), Just(Y), Just(Z)]
}

proptest! {
    #[test]
    fn born_completeness(state in arb_state(), basis in arb_basis(), q in 0usize..4) {
        let q = q % state.num_qubits();
        let (p, m) = state.outcome_distribution(q, basis).unwrap();
        prop_assert!((p + m - 1.0).abs() < TOLERANCE);
        prop_assert!(p >= 0.0 && m >= 0.0);
    }

    #[test]
    fn collapse_preserves_norm(state in arb_state(), basis in arb_basis(), q in 0usize..4, draw in 0.0f64..1.0) {
        let q = q % state.num_qubits();
        let (_, collapsed) = state.measure(q, basis, draw).unwrap();
        prop_assert_eq!(collapsed.num_qubits(), state.num_qubits() - 1);
        prop_assert!((collapsed.norm_sqr() - 1.0).abs() < TOLERANCE);
    }

    #[test]
    fn measurement_follows_draw(state in arb_state(), basis in arb_basis(), draw in 0.0f64..1.0) {
        let (p_plus, _) = state.outcome_distribution(0, basis).unwrap();
        let (o, _) = state.measure(0, basis, draw).unwrap();
        prop_assert_eq!(o == Plus, draw < p_plus);
    }
}

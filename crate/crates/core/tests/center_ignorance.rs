//! The center's announcement, together with both users' bases, leaves
//! Alice's outcome uniformly random.

use tqkd_core::protocols::{keep_rule, ProtocolId};
use tqkd_core::qstate::{ghz, make_two_qubit, Announcement, Basis, Outcome};

#[test]
fn ghz_center_learns_nothing() {
    let mut cases = 0;
    for protocol in [ProtocolId::Ghz1, ProtocolId::Ghz2, ProtocolId::Ghz3] {
        for center_basis in [Basis::X, Basis::Y] {
            for center_outcome in Outcome::ALL {
                let ann = Announcement::measured(center_basis, center_outcome);
                if !protocol.accepts(&ann) {
                    continue;
                }
                let (p, pair) = ghz().branch(0, center_basis, center_outcome).unwrap();
                assert!((p - 0.5).abs() < 1e-12);
                let pair = pair.unwrap();
                for alice_basis in [Basis::X, Basis::Y] {
                    for bob_basis in [Basis::X, Basis::Y] {
                        if !keep_rule(protocol, &ann, alice_basis, bob_basis).unwrap() {
                            continue;
                        }
                        let (p_plus, p_minus) = pair.outcome_distribution(0, alice_basis).unwrap();
                        assert!((p_plus - 0.5).abs() < 1e-12 && (p_minus - 0.5).abs() < 1e-12);
                        cases += 1;
                    }
                }
            }
        }
    }
    // GHZ1: 2 outcomes × 2 kept pairs; GHZ2, GHZ3: 4 announcements × 2 kept pairs, GHZ3 keeps all 4
    assert_eq!(cases, 4 + 8 + 16);
}

#[test]
fn bell_labels_leave_alice_random() {
    for protocol in [ProtocolId::Bell4, ProtocolId::Bell5] {
        for label in protocol.pair_labels().unwrap() {
            for basis in protocol.user_bases() {
                let (p_plus, _) = make_two_qubit(label).outcome_distribution(0, basis).unwrap();
                assert!((p_plus - 0.5).abs() < 1e-12, "{label} {basis}");
            }
        }
    }
}

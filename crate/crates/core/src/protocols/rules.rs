use serde::{Deserialize, Serialize};

use super::{PositionRecord, ProtocolError, ProtocolId};
use crate::qstate::{predicted_bob_outcome, Announcement, Basis, Outcome, TwoQubitLabel};

/// Which legitimate user is encoding a key bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Alice,
    Bob,
}

/// Protocol 3: the center measures in x when Alice and Bob used the same
/// basis and in y otherwise.
pub fn center_basis_rule_p3(alice_basis: Basis, bob_basis: Basis) -> Result<Basis, ProtocolError> {
    for b in [alice_basis, bob_basis] {
        if b == Basis::Z {
            return Err(ProtocolError::UnsupportedBasis(b));
        }
    }
    Ok(if alice_basis == bob_basis { Basis::X } else { Basis::Y })
}

fn check_announcement(protocol: ProtocolId, announcement: &Announcement) -> Result<(), ProtocolError> {
    if protocol.accepts(announcement) {
        Ok(())
    } else {
        Err(ProtocolError::MismatchedAnnouncement {
            protocol,
            announcement: *announcement,
        })
    }
}

/// Sifting: whether Alice and Bob keep a position.
pub fn keep_rule(
    protocol: ProtocolId,
    announcement: &Announcement,
    alice_basis: Basis,
    bob_basis: Basis,
) -> Result<bool, ProtocolError> {
    check_announcement(protocol, announcement)?;
    let same = alice_basis == bob_basis;
    Ok(match (protocol, announcement) {
        (ProtocolId::Ghz1 | ProtocolId::Bell4, _) => same,
        (ProtocolId::Ghz2, Announcement::Measured { basis: Basis::X, .. }) => same,
        (ProtocolId::Ghz2, _) => !same,
        (ProtocolId::Ghz3, _) => true,
        (ProtocolId::Bell5, Announcement::Pair(TwoQubitLabel::PhiPlus | TwoQubitLabel::PsiMinus)) => same,
        (ProtocolId::Bell5, _) => !same,
    })
}

/// Bob's outcome as fixed by the announcement and Alice's own result.
///
/// This is the value Alice encodes so that her bit matches Bob's.
pub fn consistency_map(
    protocol: ProtocolId,
    announcement: &Announcement,
    own_basis: Basis,
    own_outcome: Outcome,
    peer_basis: Basis,
) -> Result<Outcome, ProtocolError> {
    check_announcement(protocol, announcement)?;
    predicted_bob_outcome(*announcement, own_basis, own_outcome, peer_basis).ok_or(
        ProtocolError::NotDeterministic {
            announcement: *announcement,
            alice_basis: own_basis,
            alice_outcome: own_outcome,
            bob_basis: peer_basis,
        },
    )
}

/// Key bit for a kept, unchecked position: Bob encodes his outcome
/// (Plus → 0, Minus → 1); Alice encodes her prediction of Bob's outcome.
pub fn encode_bit(protocol: ProtocolId, position: &PositionRecord, role: Role) -> Result<u8, ProtocolError> {
    if !position.kept || position.used_for_check {
        return Err(ProtocolError::NotKeyPosition(position.index));
    }
    let missing = || ProtocolError::NotKeyPosition(position.index);
    match role {
        Role::Bob => Ok(position.bob_outcome.ok_or_else(missing)?.bit()),
        Role::Alice => {
            let announcement = position.center_announcement.ok_or_else(missing)?;
            let predicted = consistency_map(
                protocol,
                &announcement,
                position.alice_basis.ok_or_else(missing)?,
                position.alice_outcome.ok_or_else(missing)?,
                position.bob_basis.ok_or_else(missing)?,
            )?;
            Ok(predicted.bit())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::ghz;
    use Basis::{X, Y, Z};
    use Outcome::{Minus, Plus};

    fn m(basis: Basis, outcome: Outcome) -> Announcement {
        Announcement::measured(basis, outcome)
    }

    #[test]
    fn center_rule() {
        assert_eq!(center_basis_rule_p3(X, X).unwrap(), X);
        assert_eq!(center_basis_rule_p3(X, Y).unwrap(), Y);
        assert_eq!(center_basis_rule_p3(Y, Y).unwrap(), X);
        assert!(matches!(center_basis_rule_p3(Z, X), Err(ProtocolError::UnsupportedBasis(Z))));
    }

    #[test]
    fn keep_rule_examples() {
        assert!(keep_rule(ProtocolId::Ghz2, &m(Y, Plus), X, Y).unwrap());
        assert!(!keep_rule(ProtocolId::Ghz2, &m(Y, Plus), X, X).unwrap());
        let phi_plus = Announcement::Pair(TwoQubitLabel::PhiPlus);
        assert!(keep_rule(ProtocolId::Bell5, &phi_plus, X, X).unwrap());
        let comb = Announcement::Pair(TwoQubitLabel::CombPsiPlus);
        assert!(keep_rule(ProtocolId::Bell5, &comb, X, Z).unwrap());
        assert!(!keep_rule(ProtocolId::Bell5, &comb, Z, Z).unwrap());
        assert!(keep_rule(ProtocolId::Ghz3, &m(Y, Minus), X, Y).unwrap());
        assert!(!keep_rule(ProtocolId::Ghz1, &m(X, Minus), X, Y).unwrap());
    }

    #[test]
    fn keep_rule_rejects_wrong_announcement_shape() {
        let phi_plus = Announcement::Pair(TwoQubitLabel::PhiPlus);
        assert!(matches!(
            keep_rule(ProtocolId::Ghz1, &phi_plus, X, X),
            Err(ProtocolError::MismatchedAnnouncement { .. })
        ));
        assert!(keep_rule(ProtocolId::Bell4, &m(X, Plus), X, X).is_err());
        // GHZ1's center only measures in x
        assert!(keep_rule(ProtocolId::Ghz1, &m(Y, Plus), X, X).is_err());
        // Φ− is not one of Protocol 5's states
        assert!(keep_rule(ProtocolId::Bell5, &Announcement::Pair(TwoQubitLabel::PhiMinus), X, X).is_err());
    }

    #[test]
    fn consistency_examples() {
        assert_eq!(consistency_map(ProtocolId::Ghz3, &m(Y, Plus), X, Plus, Y).unwrap(), Minus);
        let comb = Announcement::Pair(TwoQubitLabel::CombPhiMinus);
        assert_eq!(consistency_map(ProtocolId::Bell5, &comb, X, Plus, Z).unwrap(), Minus);
        assert_eq!(consistency_map(ProtocolId::Ghz1, &m(X, Plus), X, Plus, X).unwrap(), Plus);
    }

    #[test]
    fn consistency_rejects_uncorrelated_bases() {
        let err = consistency_map(ProtocolId::Ghz1, &m(X, Plus), X, Plus, Y).unwrap_err();
        assert!(matches!(err, ProtocolError::NotDeterministic { .. }));
    }

    fn record(ann: Announcement, alice: (Basis, Outcome), bob: (Basis, Outcome)) -> PositionRecord {
        PositionRecord {
            index: 0,
            lost: false,
            center_announcement: Some(ann),
            alice_basis: Some(alice.0),
            alice_outcome: Some(alice.1),
            bob_basis: Some(bob.0),
            bob_outcome: Some(bob.1),
            kept: true,
            used_for_check: false,
        }
    }

    #[test]
    fn encode_examples() {
        let r = record(m(X, Plus), (Y, Plus), (Y, Minus));
        assert_eq!(encode_bit(ProtocolId::Ghz2, &r, Role::Bob).unwrap(), 1);
        assert_eq!(encode_bit(ProtocolId::Ghz2, &r, Role::Alice).unwrap(), 1);
        let mut checked = r.clone();
        checked.used_for_check = true;
        assert!(matches!(
            encode_bit(ProtocolId::Ghz2, &checked, Role::Bob),
            Err(ProtocolError::NotKeyPosition(0))
        ));
    }

    /// Every outcome combination with nonzero probability in GHZ1 yields equal bits.
    #[test]
    fn ghz1_bits_agree_exhaustively() {
        let g = ghz();
        let mut combos = 0;
        for c in Outcome::ALL {
            let (pc, pair) = g.branch(0, X, c).unwrap();
            assert!(pc > 0.0);
            let pair = pair.unwrap();
            for basis in [X, Y] {
                for a in Outcome::ALL {
                    let (pa, bob) = pair.branch(0, basis, a).unwrap();
                    if pa < 1e-12 {
                        continue;
                    }
                    for b in Outcome::ALL {
                        let (pb, _) = bob.as_ref().unwrap().branch(0, basis, b).unwrap();
                        if pb < 1e-12 {
                            continue;
                        }
                        let r = record(m(X, c), (basis, a), (basis, b));
                        assert_eq!(
                            encode_bit(ProtocolId::Ghz1, &r, Role::Alice).unwrap(),
                            encode_bit(ProtocolId::Ghz1, &r, Role::Bob).unwrap()
                        );
                        combos += 1;
                    }
                }
            }
        }
        assert_eq!(combos, 8);
    }
}

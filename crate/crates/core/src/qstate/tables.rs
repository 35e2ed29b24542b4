//! Correlation tables derived from projection arithmetic.
//!
//! Each table lists, for a center announcement and an Alice eigenstate, which
//! eigenstate Bob is left in. Entries are computed from the state vectors and
//! compared against the published tables, which are kept here verbatim as the
//! comparison target.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::{ghz, make_two_qubit, Basis, Outcome, StateVector, TwoQubitLabel, TOLERANCE};

/// What the center tells Alice and Bob about a position.
///
/// GHZ protocols announce the center's own measurement result; Bell-state
/// protocols announce the label of the pair that was handed out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Announcement {
    Measured { basis: Basis, outcome: Outcome },
    Pair(TwoQubitLabel),
}

impl Announcement {
    pub fn measured(basis: Basis, outcome: Outcome) -> Self {
        Announcement::Measured { basis, outcome }
    }

    /// Label used in CSV output: `x+`, `y-`, `PsiPlus`, ...
    pub fn code(&self) -> String {
        match self {
            Announcement::Measured { basis, outcome } => format!("{basis}{outcome}"),
            Announcement::Pair(label) => label.name().to_string(),
        }
    }

    /// Ket label for rendered tables.
    pub fn ket(&self) -> String {
        match self {
            Announcement::Measured { basis, outcome } => format!("|{basis}{outcome}>"),
            Announcement::Pair(label) => format!("|{}>", label.symbol()),
        }
    }

    /// The Alice–Bob pair state this announcement leaves behind.
    pub fn pair_state(&self) -> Option<StateVector> {
        match *self {
            Announcement::Measured { basis, outcome } => {
                ghz().branch(0, basis, outcome).ok().and_then(|(_, s)| s)
            }
            Announcement::Pair(label) => Some(make_two_qubit(label)),
        }
    }
}

impl fmt::Display for Announcement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.code())
    }
}

/// The three published correlation tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TableScenario {
    BellTableI,
    MixedTableII,
    GhzTableIII,
}

impl TableScenario {
    pub const ALL: [TableScenario; 3] = [
        TableScenario::BellTableI,
        TableScenario::MixedTableII,
        TableScenario::GhzTableIII,
    ];

    pub fn title(self) -> &'static str {
        match self {
            TableScenario::BellTableI => "Bell states {Ψ+, Ψ-, Φ+, Φ-}, bases x and z",
            TableScenario::MixedTableII => "Mixed states {Φ+, Ψ-, φ-, ψ+}, bases x and z",
            TableScenario::GhzTableIII => "GHZ triplet after the center measures, bases x and y",
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            TableScenario::BellTableI => "BellTableI",
            TableScenario::MixedTableII => "MixedTableII",
            TableScenario::GhzTableIII => "GhzTableIII",
        }
    }

    /// Published layout: one column per announcement, four `alice>bob` cells each.
    fn printed(self) -> [(Announcement, [&'static str; 4]); 4] {
        use Announcement::{Measured as M, Pair as P};
        use TwoQubitLabel::*;
        let m = |basis, outcome| M { basis, outcome };
        match self {
            TableScenario::BellTableI => [
                (P(PsiPlus), ["x+>x+", "x->x-", "z+>z+", "z->z-"]),
                (P(PsiMinus), ["x+>x-", "x->x+", "z+>z+", "z->z-"]),
                (P(PhiPlus), ["x+>x+", "x->x-", "z+>z-", "z->z+"]),
                (P(PhiMinus), ["x->x+", "x+>x-", "z+>z-", "z->z+"]),
            ],
            TableScenario::MixedTableII => [
                (P(PhiPlus), ["x+>x+", "x->x-", "z+>z-", "z->z+"]),
                (P(PsiMinus), ["x+>x-", "x->x+", "z+>z+", "z->z-"]),
                (P(CombPhiMinus), ["x+>z-", "x->z+", "z+>x-", "z->x+"]),
                (P(CombPsiPlus), ["x+>z+", "x->z-", "z+>x+", "z->x-"]),
            ],
            TableScenario::GhzTableIII => [
                (m(Basis::X, Outcome::Plus), ["x+>x+", "x->x-", "y+>y-", "y->y+"]),
                (m(Basis::X, Outcome::Minus), ["x+>x-", "x->x+", "y+>y+", "y->y-"]),
                (m(Basis::Y, Outcome::Plus), ["x+>y-", "x->y+", "y+>x-", "y->x+"]),
                (m(Basis::Y, Outcome::Minus), ["x+>y+", "x->y-", "y+>x-", "y->x-"]),
            ],
        }
    }
}

fn parse_ket(s: &str) -> (Basis, Outcome) {
    let mut chars = s.chars();
    let basis = match chars.next() {
        Some('x') => Basis::X,
        Some('y') => Basis::Y,
        Some('z') => Basis::Z,
        other => panic!("bad basis in printed table: {other:?}"),
    };
    let outcome = match chars.next() {
        Some('+') => Outcome::Plus,
        Some('-') => Outcome::Minus,
        other => panic!("bad sign in printed table: {other:?}"),
    };
    (basis, outcome)
}

/// One cell of a correlation table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEntry {
    pub center: Announcement,
    pub alice_basis: Basis,
    pub alice_outcome: Outcome,
    /// The basis the published table lists for Bob.
    pub bob_basis: Basis,
    /// Bob's outcome in `bob_basis` when it is certain, otherwise `None`.
    pub bob_outcome: Option<Outcome>,
    pub deterministic: bool,
    pub printed_outcome: Outcome,
    pub matches_paper: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTable {
    pub scenario: TableScenario,
    pub entries: Vec<CorrelationEntry>,
}

/// Bob's outcome in `bob_basis` given the announcement and Alice's result,
/// computed by projection. `None` when Bob's result is not certain or the
/// Alice result has zero probability.
pub fn derive_bob_outcome(
    center: Announcement,
    alice_basis: Basis,
    alice_outcome: Outcome,
    bob_basis: Basis,
) -> Option<Outcome> {
    let pair = center.pair_state()?;
    let (p, bob) = pair.branch(0, alice_basis, alice_outcome).ok()?;
    if p <= TOLERANCE {
        return None;
    }
    let (p_plus, p_minus) = bob?.outcome_distribution(0, bob_basis).ok()?;
    if p_plus >= 1.0 - TOLERANCE {
        Some(Outcome::Plus)
    } else if p_minus >= 1.0 - TOLERANCE {
        Some(Outcome::Minus)
    } else {
        None
    }
}

/// Recomputes one published table from the state vectors.
pub fn derive_correlation_table(scenario: TableScenario) -> CorrelationTable {
    let mut entries = Vec::with_capacity(16);
    for (center, cells) in scenario.printed() {
        for cell in cells {
            let (alice, bob) = cell.split_once('>').expect("alice>bob cell");
            let (alice_basis, alice_outcome) = parse_ket(alice);
            let (bob_basis, printed_outcome) = parse_ket(bob);
            let bob_outcome = derive_bob_outcome(center, alice_basis, alice_outcome, bob_basis);
            entries.push(CorrelationEntry {
                center,
                alice_basis,
                alice_outcome,
                bob_basis,
                bob_outcome,
                deterministic: bob_outcome.is_some(),
                printed_outcome,
                matches_paper: bob_outcome == Some(printed_outcome),
            });
        }
    }
    CorrelationTable { scenario, entries }
}

type LookupKey = (Announcement, Basis, Outcome, Basis);

/// Precomputed `derive_bob_outcome` for every announcement the protocols use.
pub(crate) fn correlation_lookup() -> &'static BTreeMap<LookupKey, Option<Outcome>> {
    static LOOKUP: OnceLock<BTreeMap<LookupKey, Option<Outcome>>> = OnceLock::new();
    LOOKUP.get_or_init(|| {
        let mut announcements: Vec<Announcement> = Vec::new();
        for basis in Basis::ALL {
            for outcome in Outcome::ALL {
                announcements.push(Announcement::measured(basis, outcome));
            }
        }
        announcements.extend(TwoQubitLabel::ALL.map(Announcement::Pair));
        let mut map = BTreeMap::new();
        for center in announcements {
            for ab in Basis::ALL {
                for ao in Outcome::ALL {
                    for bb in Basis::ALL {
                        map.insert((center, ab, ao, bb), derive_bob_outcome(center, ab, ao, bb));
                    }
                }
            }
        }
        map
    })
}

/// Cached form of [`derive_bob_outcome`].
pub fn predicted_bob_outcome(
    center: Announcement,
    alice_basis: Basis,
    alice_outcome: Outcome,
    bob_basis: Basis,
) -> Option<Outcome> {
    correlation_lookup()
        .get(&(center, alice_basis, alice_outcome, bob_basis))
        .copied()
        .flatten()
}

impl CorrelationTable {
    pub fn matches(&self) -> usize {
        self.entries.iter().filter(|e| e.matches_paper).count()
    }

    pub fn discrepancies(&self) -> impl Iterator<Item = &CorrelationEntry> {
        self.entries.iter().filter(|e| !e.matches_paper)
    }

    pub const CSV_HEADER: &'static str =
        "scenario,center,alice_basis,alice_outcome,bob_basis,bob_outcome,deterministic,matches_paper";

    /// CSV rows without the header line.
    pub fn csv_rows(&self) -> Vec<String> {
        self.entries
            .iter()
            .map(|e| {
                format!(
                    "{},{},{},{},{},{},{},{}",
                    self.scenario.code(),
                    e.center.code(),
                    e.alice_basis,
                    e.alice_outcome,
                    e.bob_basis,
                    e.bob_outcome.map_or("?".to_string(), |o| o.to_string()),
                    e.deterministic,
                    e.matches_paper
                )
            })
            .collect()
    }

    /// Aligned text mirroring the published layout: one column per center
    /// announcement, Alice/Bob row pairs. Cells that differ from the printed
    /// table are starred and listed below it.
    pub fn render_text(&self) -> String {
        let columns: Vec<Announcement> = {
            let mut seen = Vec::new();
            for e in &self.entries {
                if !seen.contains(&e.center) {
                    seen.push(e.center);
                }
            }
            seen
        };
        let width = 8;
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.scenario.title());
        let rule = "=".repeat(8 + columns.len() * (width + 1));
        let _ = writeln!(out, "{rule}");
        let _ = write!(out, "{:<7}|", "Center");
        for c in &columns {
            let _ = write!(out, " {:<width$}", c.ket());
        }
        out.push('\n');
        let _ = writeln!(out, "{}", "-".repeat(rule.chars().count()));
        for row in 0..4 {
            let cells: Vec<&CorrelationEntry> = columns
                .iter()
                .map(|c| {
                    self.entries
                        .iter()
                        .filter(|e| e.center == *c)
                        .nth(row)
                        .expect("four entries per column")
                })
                .collect();
            let _ = write!(out, "{:<7}|", "Alice");
            for e in &cells {
                let _ = write!(out, " {:<width$}", format!("|{}{}>", e.alice_basis, e.alice_outcome));
            }
            out.push('\n');
            let _ = write!(out, "{:<7}|", "Bob");
            for e in &cells {
                let ket = match e.bob_outcome {
                    Some(o) => format!("|{}{}>", e.bob_basis, o),
                    None => format!("|{}?>", e.bob_basis),
                };
                let mark = if e.matches_paper { "" } else { "*" };
                let _ = write!(out, " {:<width$}", format!("{ket}{mark}"));
            }
            out.push('\n');
            let _ = writeln!(out, "{}", "-".repeat(rule.chars().count()));
        }
        for e in self.discrepancies() {
            let _ = writeln!(
                out,
                "* center {}, Alice |{}{}>: derived Bob {}, printed |{}{}>",
                e.center.ket(),
                e.alice_basis,
                e.alice_outcome,
                e.bob_outcome
                    .map_or("undetermined".to_string(), |o| format!("|{}{}>", e.bob_basis, o)),
                e.bob_basis,
                e.printed_outcome
            );
        }
        out
    }
}

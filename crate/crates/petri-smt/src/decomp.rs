//! From solver models to validated flat unit-safe NUPN decompositions.
//!
//! Bitvector models may put a place into several units at once; the
//! first-fit-decreasing pass collapses such multi-unit assignments into a
//! proper partition. Validation then checks the partition against the
//! concurrency relation, and emission renders the flat NUPN text with
//! empty units dropped. A binary search over a SAT/UNSAT decision
//! procedure finds the smallest feasible unit count.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::color::greedy_color_count;
use crate::model::{place_key, ModelAssignment, ModelValue};
use crate::net::{PetriNet, PlaceNumbering};
use crate::reach::ConcurrencyRelation;
use crate::smt::{EncodingConfig, Fragment, SatStatus};
use crate::solver::SolveStatus;

/// Map from each place (by number) to the nonempty set of units a model
/// put it in. Only bitvector models can produce more than one unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitAssignment {
    sets: Vec<BTreeSet<u32>>,
}

impl UnitAssignment {
    pub fn new(sets: Vec<BTreeSet<u32>>) -> Self {
        assert!(sets.iter().all(|s| !s.is_empty()), "every unit set must be nonempty");
        UnitAssignment { sets }
    }

    pub fn place_count(&self) -> u32 {
        self.sets.len() as u32
    }

    /// Units allowed for place number `k`, ascending.
    pub fn units_of(&self, k: u32) -> &BTreeSet<u32> {
        &self.sets[(k - 1) as usize]
    }
}

/// Total map from each place (by number) to its single unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    units: Vec<u32>,
}

impl Partition {
    pub fn new(units: Vec<u32>) -> Self {
        Partition { units }
    }

    pub fn place_count(&self) -> u32 {
        self.units.len() as u32
    }

    pub fn unit_of(&self, k: u32) -> u32 {
        self.units[(k - 1) as usize]
    }

    /// `(place number, unit)` pairs in place order.
    pub fn iter(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.units.iter().enumerate().map(|(i, u)| (i as u32 + 1, *u))
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecompError {
    #[error("place `{place}`: {detail}")]
    ValueOutOfRange { place: String, detail: String },
    #[error("model assigns no value to place `{place}`")]
    MissingPlaceValue { place: String },
    #[error("place `{place}` has no conflict-free unit available; the assignment cannot come from a valid model")]
    ConflictDetected { place: String },
    #[error("partition has {} validation violation(s)", .0.len())]
    InvalidPartition(Vec<Violation>),
}

/// Converts parsed model values into unit sets: set bits for bitvectors
/// (bit 1, the least significant, is unit 1), the constructor index for
/// datatypes, the integer itself for integer fragments.
pub fn assignment_from_model(
    model: &ModelAssignment,
    cfg: &EncodingConfig,
    num: &PlaceNumbering,
) -> Result<UnitAssignment, DecompError> {
    let n = cfg.num_units;
    let mut sets = Vec::with_capacity(num.count() as usize);
    for (k, place) in num.iter() {
        let key = place_key(cfg, num, k);
        let out_of_range = |detail: String| DecompError::ValueOutOfRange {
            place: place.to_string(),
            detail,
        };
        let value = model
            .get(&key)
            .ok_or_else(|| DecompError::MissingPlaceValue { place: place.to_string() })?;
        let units: BTreeSet<u32> = match (cfg.fragment, value) {
            (Fragment::QfBv | Fragment::QfUfBv, ModelValue::Bits(bits)) => {
                if bits.width() != n {
                    return Err(out_of_range(format!(
                        "bitvector has width {}, expected {n}",
                        bits.width()
                    )));
                }
                let units: BTreeSet<u32> = bits.ones().map(|i| i as u32 + 1).collect();
                if units.is_empty() {
                    return Err(out_of_range("zero bitvector puts the place in no unit".into()));
                }
                units
            }
            (Fragment::QfDt | Fragment::QfUfDt, ModelValue::Ctor(name)) => {
                let unit = name
                    .strip_prefix('u')
                    .and_then(|digits| digits.parse::<u32>().ok())
                    .filter(|v| 1 <= *v && *v <= n && name == &format!("u{v}"))
                    .ok_or_else(|| out_of_range(format!("`{name}` is not a unit constructor")))?;
                BTreeSet::from([unit])
            }
            (Fragment::QfIdl | Fragment::QfUfIdl, ModelValue::Int(v)) => {
                if *v < 1 || *v > n as i64 {
                    return Err(out_of_range(format!("integer {v} outside 1..={n}")));
                }
                BTreeSet::from([*v as u32])
            }
            (_, other) => {
                return Err(out_of_range(format!("value {other:?} does not fit the fragment")))
            }
        };
        sets.push(units);
    }
    Ok(UnitAssignment::new(sets))
}

/// Collapses unit sets to single units, first-fit-decreasing: places in
/// decreasing conflict-graph degree (ties by ascending place number) each
/// take the smallest allowed unit not used by an already-placed
/// concurrent place. Inputs originating in a valid model always succeed,
/// because their unit sets are disjoint across concurrent pairs.
pub fn ffd_repair(
    assign: &UnitAssignment,
    rel: &ConcurrencyRelation,
    num: &PlaceNumbering,
) -> Result<Partition, DecompError> {
    let count = assign.place_count();
    let degrees = rel.degrees(count);
    let mut order: Vec<u32> = (1..=count).collect();
    order.sort_by_key(|&k| (std::cmp::Reverse(degrees[(k - 1) as usize]), k));

    let mut units = vec![0u32; count as usize];
    for &k in &order {
        let chosen = assign
            .units_of(k)
            .iter()
            .copied()
            .find(|&u| {
                (1..=count).all(|other| {
                    other == k || units[(other - 1) as usize] != u || !rel.contains(k, other)
                })
            })
            .ok_or_else(|| DecompError::ConflictDetected {
                place: num.place(k).unwrap_or("?").to_string(),
            })?;
        units[(k - 1) as usize] = chosen;
    }
    Ok(Partition::new(units))
}

/// One way a partition can fail validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// Place has no unit (unit 0 in a hand-built partition).
    Unassigned { place: u32 },
    /// Unit index outside 1..=n.
    UnitOutOfRange { place: u32, unit: u32, max: u32 },
    /// Two concurrent places share a unit.
    SharedUnit { first: u32, second: u32, unit: u32 },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::Unassigned { place } => write!(f, "place #{place} is in no unit"),
            Violation::UnitOutOfRange { place, unit, max } => {
                write!(f, "place #{place} is in unit {unit}, outside 1..={max}")
            }
            Violation::SharedUnit { first, second, unit } => {
                write!(f, "concurrent places #{first} and #{second} share unit {unit}")
            }
        }
    }
}

/// Checks a partition: every place in a unit, all units within `1..=n`,
/// no concurrent pair sharing a unit. An empty result means the partition
/// is valid; violations are data, not errors.
pub fn validate_partition(
    part: &Partition,
    rel: &ConcurrencyRelation,
    n: u32,
) -> Vec<Violation> {
    let mut violations = Vec::new();
    for (place, unit) in part.iter() {
        if unit == 0 {
            violations.push(Violation::Unassigned { place });
        } else if unit > n {
            violations.push(Violation::UnitOutOfRange { place, unit, max: n });
        }
    }
    for (a, b) in rel.pairs() {
        let (ua, ub) = (part.unit_of(a), part.unit_of(b));
        if ua == ub && ua != 0 {
            violations.push(Violation::SharedUnit { first: a, second: b, unit: ua });
        }
    }
    violations
}

/// Flat NUPN: one root unit with leaf units directly below it, each leaf
/// listing its places. Unit-safety rests on the leaves being conflict-free,
/// which [`emit_nupn`] enforces before constructing the value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Nupn {
    pub root: String,
    /// `(unit id, places in declaration order)` per nonempty unit.
    pub leaves: Vec<(String, Vec<String>)>,
    /// Whether some unit of the source partition was empty and dropped,
    /// renumbering the rest densely.
    pub dropped_empty_units: bool,
}

impl Nupn {
    /// Text form: a `root` line, then one `unit uK: places...` line per
    /// leaf, LF line endings.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "root {}", self.root).unwrap();
        for (id, places) in &self.leaves {
            writeln!(out, "unit {}: {}", id, places.join(" ")).unwrap();
        }
        out
    }
}

/// Renders a validated partition as a flat NUPN. Empty units are dropped
/// and the remaining ones renumbered densely, so the leaf count reflects
/// the decomposition rather than the requested unit count.
pub fn emit_nupn(
    part: &Partition,
    net: &PetriNet,
    rel: &ConcurrencyRelation,
) -> Result<Nupn, DecompError> {
    let max_unit = part.iter().map(|(_, u)| u).max().unwrap_or(0);
    let violations = validate_partition(part, rel, max_unit.max(1));
    if !violations.is_empty() {
        return Err(DecompError::InvalidPartition(violations));
    }
    let mut used: Vec<u32> = part.iter().map(|(_, u)| u).collect::<BTreeSet<_>>().into_iter().collect();
    used.sort_unstable();
    let dropped = used.len() < max_unit as usize;
    let leaves = used
        .iter()
        .enumerate()
        .map(|(i, &unit)| {
            let places: Vec<String> = net
                .places
                .iter()
                .enumerate()
                .filter(|(idx, _)| part.unit_of(*idx as u32 + 1) == unit)
                .map(|(_, p)| p.clone())
                .collect();
            (format!("u{}", i + 1), places)
        })
        .collect();
    Ok(Nupn { root: "u0".to_string(), leaves, dropped_empty_units: dropped })
}

/// Answer of one decision-procedure call inside the minimal-unit search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Sat,
    Unsat,
    Inconclusive,
}

impl From<SatStatus> for Decision {
    fn from(s: SatStatus) -> Decision {
        match s {
            SatStatus::Sat => Decision::Sat,
            SatStatus::Unsat => Decision::Unsat,
        }
    }
}

impl From<SolveStatus> for Decision {
    fn from(s: SolveStatus) -> Decision {
        match s {
            SolveStatus::Sat => Decision::Sat,
            SolveStatus::Unsat => Decision::Unsat,
            SolveStatus::Unknown | SolveStatus::Timeout | SolveStatus::Error => {
                Decision::Inconclusive
            }
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FindMinError<E> {
    #[error("decision procedure was inconclusive at {units} units")]
    SolverInconclusive { units: u32 },
    #[error("decision procedure failed: {0}")]
    Backend(E),
}

/// Smallest `n` for which `decide(n)` is SAT, by binary search on
/// `[1, greedy upper bound]`. The greedy coloring itself witnesses
/// satisfiability at the upper bound, so the search only ever queries
/// strictly below it.
pub fn find_min_units<E>(
    place_count: u32,
    rel: &ConcurrencyRelation,
    mut decide: impl FnMut(u32) -> Result<Decision, E>,
) -> Result<u32, FindMinError<E>> {
    assert!(place_count >= 1, "a net has at least one place");
    let mut lo = 1u32;
    let mut hi = greedy_color_count(place_count, rel).max(1);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        match decide(mid).map_err(FindMinError::Backend)? {
            Decision::Sat => hi = mid,
            Decision::Unsat => lo = mid + 1,
            Decision::Inconclusive => {
                return Err(FindMinError::SolverInconclusive { units: mid })
            }
        }
    }
    Ok(lo)
}

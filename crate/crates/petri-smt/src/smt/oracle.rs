//! Reference decision procedure for the generated constraints.
//!
//! Each fragment's script is satisfiable exactly when the places admit a
//! unit assignment that is proper on the concurrency relation and respects
//! that fragment's symmetry-breaking bound for every place. The bounds are
//! spelled per fragment below, though they all work out to units
//! `1..=min(#p, n)`; keeping them separate lets tests exercise the claim
//! that the conventions agree rather than assume it.

use crate::color::BudgetExceeded;
use crate::reach::ConcurrencyRelation;

use super::{EncodingConfig, Fragment};

/// Verdict of the reference search, mirroring a solver's answer on a
/// script produced from the same instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SatStatus {
    Sat,
    Unsat,
}

impl std::fmt::Display for SatStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SatStatus::Sat => "sat",
            SatStatus::Unsat => "unsat",
        })
    }
}

/// Default node budget for oracle searches; generous for the intended
/// instance sizes (around fifteen places).
pub const DEFAULT_ORACLE_BUDGET: u64 = 50_000_000;

/// Units place number `k` may use under `fragment`'s symmetry convention.
fn allowed_units(fragment: Fragment, k: u32, n: u32) -> std::ops::RangeInclusive<u32> {
    match fragment {
        // Some bit among positions 1..=min(#p, n) must be set, and the
        // chosen unit is a set bit within that prefix.
        Fragment::QfBv | Fragment::QfUfBv => 1..=k.min(n),
        // Places with #p < n are pinned to constructors u1..u#p; the rest
        // range over the whole enumerated type.
        Fragment::QfDt | Fragment::QfUfDt => {
            if k < n {
                1..=k
            } else {
                1..=n
            }
        }
        // Places with #p < n get the symmetry disjunction, the rest the
        // bounding disjunction over 1..=n.
        Fragment::QfIdl | Fragment::QfUfIdl => {
            if k < n {
                1..=k
            } else {
                1..=n
            }
        }
    }
}

/// Searches for a unit assignment satisfying the fragment's constraints,
/// returning one as 1-based units indexed by place number - 1, or `None`
/// when the constraints are unsatisfiable. Each attempted place/unit pair
/// costs one node from `budget`.
pub fn oracle_model(
    place_count: u32,
    rel: &ConcurrencyRelation,
    cfg: &EncodingConfig,
    budget: u64,
) -> Result<Option<Vec<u32>>, BudgetExceeded> {
    let n = place_count as usize;
    let adj = rel.adjacency(place_count);
    let mut units = vec![0u32; n];
    let mut remaining = budget;
    let found = assign(cfg, place_count, &adj, 0, &mut units, &mut remaining)
        .map_err(|()| BudgetExceeded { budget })?;
    Ok(found.then_some(units))
}

/// SAT/UNSAT verdict of the fragment's constraints on this instance.
pub fn oracle_sat(
    place_count: u32,
    rel: &ConcurrencyRelation,
    cfg: &EncodingConfig,
    budget: u64,
) -> Result<SatStatus, BudgetExceeded> {
    Ok(match oracle_model(place_count, rel, cfg, budget)? {
        Some(_) => SatStatus::Sat,
        None => SatStatus::Unsat,
    })
}

fn assign(
    cfg: &EncodingConfig,
    place_count: u32,
    adj: &[bool],
    depth: usize,
    units: &mut [u32],
    remaining: &mut u64,
) -> Result<bool, ()> {
    let n = place_count as usize;
    if depth == n {
        return Ok(true);
    }
    let place = depth as u32 + 1;
    for unit in allowed_units(cfg.fragment, place, cfg.num_units) {
        if *remaining == 0 {
            return Err(());
        }
        *remaining -= 1;
        let clash = (0..depth).any(|w| adj[depth * n + w] && units[w] == unit);
        if clash {
            continue;
        }
        units[depth] = unit;
        if assign(cfg, place_count, adj, depth + 1, units, remaining)? {
            return Ok(true);
        }
        units[depth] = 0;
    }
    Ok(false)
}

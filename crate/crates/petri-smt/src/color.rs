//! Coloring of the conflict graph induced by the concurrency relation.
//!
//! The smallest number of units a net can be partitioned into is exactly
//! the chromatic number of this graph. [`greedy_color_count`] gives a fast
//! upper bound used to seed searches; [`chromatic_number`] computes the
//! exact value by backtracking with branch and bound, guarded by a node
//! budget so callers stay in control on hard instances.

use thiserror::Error;

use crate::reach::ConcurrencyRelation;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("search budget of {budget} nodes exceeded")]
pub struct BudgetExceeded {
    pub budget: u64,
}

/// Greedy coloring in descending-degree order (ties by place number).
/// Returns 1-based colors indexed by place number - 1; every color class
/// is nonempty and the count is an upper bound on the chromatic number.
pub fn greedy_coloring(place_count: u32, rel: &ConcurrencyRelation) -> Vec<u32> {
    let n = place_count as usize;
    let adj = rel.adjacency(place_count);
    let degrees = rel.degrees(place_count);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| (std::cmp::Reverse(degrees[v]), v));

    let mut colors = vec![0u32; n];
    for &v in &order {
        let mut used = vec![false; n + 1];
        for w in 0..n {
            if adj[v * n + w] && colors[w] != 0 {
                used[colors[w] as usize] = true;
            }
        }
        colors[v] = (1..).find(|&c| !used[c as usize]).unwrap();
    }
    colors
}

/// Number of colors the greedy heuristic needs; 1 for an edgeless graph
/// with at least one place, 0 for an empty graph.
pub fn greedy_color_count(place_count: u32, rel: &ConcurrencyRelation) -> u32 {
    greedy_coloring(place_count, rel).into_iter().max().unwrap_or(0)
}

/// Exact chromatic number of the conflict graph. Explores colorings in
/// descending-degree order, pruning branches that cannot beat the best
/// coloring found so far. Each attempted vertex/color assignment costs one
/// node from `budget`.
pub fn chromatic_number(
    place_count: u32,
    rel: &ConcurrencyRelation,
    budget: u64,
) -> Result<u32, BudgetExceeded> {
    let n = place_count as usize;
    if n == 0 {
        return Ok(0);
    }
    let adj = rel.adjacency(place_count);
    let degrees = rel.degrees(place_count);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| (std::cmp::Reverse(degrees[v]), v));

    let mut best = greedy_color_count(place_count, rel);
    let mut colors = vec![0u32; n];
    let mut remaining = budget;
    search(&order, &adj, n, 0, 0, &mut colors, &mut best, &mut remaining)
        .map(|()| best)
        .map_err(|()| BudgetExceeded { budget })
}

/// Depth-first search over colorings; `used` is the highest color assigned
/// on the current path. Updates `best` in place; `Err(())` means the node
/// budget ran out.
#[allow(clippy::too_many_arguments)]
fn search(
    order: &[usize],
    adj: &[bool],
    n: usize,
    depth: usize,
    used: u32,
    colors: &mut [u32],
    best: &mut u32,
    remaining: &mut u64,
) -> Result<(), ()> {
    if used >= *best {
        return Ok(());
    }
    if depth == order.len() {
        *best = used.max(1);
        return Ok(());
    }
    let v = order[depth];
    for color in 1..=(used + 1).min(*best - 1) {
        if *remaining == 0 {
            return Err(());
        }
        *remaining -= 1;
        let clash = (0..n).any(|w| adj[v * n + w] && colors[w] == color);
        if clash {
            continue;
        }
        colors[v] = color;
        search(order, adj, n, depth + 1, used.max(color), colors, best, remaining)?;
        colors[v] = 0;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const BUDGET: u64 = 1_000_000;

    fn rel(pairs: &[(u32, u32)]) -> ConcurrencyRelation {
        ConcurrencyRelation::from_pairs(pairs.iter().copied())
    }

    #[test]
    fn edgeless_graph_needs_one_color() {
        assert_eq!(chromatic_number(5, &rel(&[]), BUDGET), Ok(1));
    }

    #[test]
    fn triangle_needs_three() {
        assert_eq!(chromatic_number(3, &rel(&[(1, 2), (2, 3), (1, 3)]), BUDGET), Ok(3));
    }

    // Independent check for the odd cycle: try every assignment of k colors
    // by counting in base k.
    fn colorable_exhaustive(n: usize, edges: &[(u32, u32)], k: u32) -> bool {
        let total = (k as u64).pow(n as u32);
        'outer: for code in 0..total {
            let mut c = code;
            let mut assign = vec![0u32; n];
            for slot in assign.iter_mut() {
                *slot = (c % k as u64) as u32;
                c /= k as u64;
            }
            for &(a, b) in edges {
                if assign[(a - 1) as usize] == assign[(b - 1) as usize] {
                    continue 'outer;
                }
            }
            return true;
        }
        false
    }

    #[test]
    fn five_cycle_needs_three() {
        let edges = [(1, 2), (2, 3), (3, 4), (4, 5), (1, 5)];
        assert!(!colorable_exhaustive(5, &edges, 2));
        assert!(colorable_exhaustive(5, &edges, 3));
        assert_eq!(chromatic_number(5, &rel(&edges), BUDGET), Ok(3));
    }

    #[test]
    fn complete_graph_needs_all_colors() {
        for n in 1..=6u32 {
            let mut edges = Vec::new();
            for a in 1..=n {
                for b in a + 1..=n {
                    edges.push((a, b));
                }
            }
            assert_eq!(chromatic_number(n, &rel(&edges), BUDGET), Ok(n));
        }
    }

    #[test]
    fn tiny_budget_reported() {
        let edges = [(1, 2), (2, 3), (3, 4), (4, 5), (1, 5)];
        assert_eq!(
            chromatic_number(5, &rel(&edges), 1),
            Err(BudgetExceeded { budget: 1 })
        );
    }

    #[test]
    fn greedy_coloring_is_proper() {
        let edges = [(1, 2), (2, 3), (3, 4), (4, 5), (1, 5), (1, 3)];
        let r = rel(&edges);
        let colors = greedy_coloring(5, &r);
        for (a, b) in r.pairs() {
            assert_ne!(colors[(a - 1) as usize], colors[(b - 1) as usize]);
        }
    }

    fn arb_edges() -> impl Strategy<Value = Vec<(u32, u32)>> {
        prop::collection::vec((1u32..=7, 1u32..=7), 0..15).prop_map(|raw| {
            raw.into_iter().filter(|(a, b)| a != b).collect()
        })
    }

    proptest! {
        #[test]
        fn exact_value_never_exceeds_greedy(edges in arb_edges()) {
            let r = rel(&edges);
            let exact = chromatic_number(7, &r, BUDGET).unwrap();
            prop_assert!(exact <= greedy_color_count(7, &r));
            prop_assert!(exact >= 1);
        }

        #[test]
        fn exact_value_matches_exhaustive(edges in arb_edges()) {
            let r = rel(&edges);
            let exact = chromatic_number(7, &r, BUDGET).unwrap();
            prop_assert!(colorable_exhaustive(7, &edges, exact));
            if exact > 1 {
                prop_assert!(!colorable_exhaustive(7, &edges, exact - 1));
            }
        }
    }
}

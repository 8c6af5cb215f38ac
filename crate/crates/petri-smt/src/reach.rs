//! Explicit-state reachability on safe nets and the concurrency relation.
//!
//! Two places are concurrent iff some reachable marking holds a token in
//! both. The exploration uses interleaving semantics: a transition is
//! enabled iff all its inputs are marked, and firing removes the inputs
//! then adds the outputs. A relation can also be loaded from a `.conc`
//! file (one `p1 p2` pair per line) to decouple encoding from exploration.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt::Write as _;

use thiserror::Error;

use crate::net::{PetriNet, PlaceNumbering};

/// Set of marked places, stored as a bitset over 1-based place numbers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Marking {
    words: Box<[u64]>,
}

impl Marking {
    pub fn empty(place_count: u32) -> Self {
        let len = (place_count as usize).div_ceil(64).max(1);
        Marking { words: vec![0; len].into_boxed_slice() }
    }

    pub fn from_numbers(place_count: u32, numbers: impl IntoIterator<Item = u32>) -> Self {
        let mut m = Marking::empty(place_count);
        for n in numbers {
            m.insert(n);
        }
        m
    }

    pub fn from_names(num: &PlaceNumbering, names: &BTreeSet<String>) -> Option<Self> {
        let mut m = Marking::empty(num.count());
        for name in names {
            m.insert(num.number_of(name)?);
        }
        Some(m)
    }

    pub fn insert(&mut self, number: u32) {
        let bit = (number - 1) as usize;
        self.words[bit / 64] |= 1 << (bit % 64);
    }

    pub fn contains(&self, number: u32) -> bool {
        let bit = (number - 1) as usize;
        self.words[bit / 64] >> (bit % 64) & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    /// Marked place numbers in ascending order.
    pub fn numbers(&self) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.len());
        for (i, &word) in self.words.iter().enumerate() {
            let mut w = word;
            while w != 0 {
                let bit = w.trailing_zeros() as usize;
                out.push((i * 64 + bit) as u32 + 1);
                w &= w - 1;
            }
        }
        out
    }

    fn superset_of(&self, other: &Marking) -> bool {
        self.words.iter().zip(other.words.iter()).all(|(a, b)| a & b == *b)
    }

    fn intersects(&self, other: &Marking) -> bool {
        self.words.iter().zip(other.words.iter()).any(|(a, b)| a & b != 0)
    }

    fn minus(&self, other: &Marking) -> Marking {
        let words = self.words.iter().zip(other.words.iter()).map(|(a, b)| a & !b).collect();
        Marking { words }
    }

    fn union(&self, other: &Marking) -> Marking {
        let words = self.words.iter().zip(other.words.iter()).map(|(a, b)| a | b).collect();
        Marking { words }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReachError {
    #[error("net is not safe: firing `{transition}` would put a second token in `{place}`")]
    NotSafe { transition: String, place: String },
    #[error("state limit of {limit} markings exceeded")]
    StateLimitExceeded { limit: usize },
}

/// Explores all markings reachable from the initial marking, in BFS order.
/// The result includes the initial marking. Exploration aborts with
/// [`ReachError::NotSafe`] as soon as any firing would mark an already
/// marked place, and with [`ReachError::StateLimitExceeded`] once more than
/// `state_limit` distinct markings have been discovered.
pub fn explore_reachable(net: &PetriNet, state_limit: usize) -> Result<Vec<Marking>, ReachError> {
    assert!(state_limit >= 1, "state_limit must be at least 1");
    let num = crate::net::numbering(net);

    let transitions: Vec<(usize, Marking, Marking)> = net
        .transitions
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let ins = Marking::from_names(&num, &t.inputs).expect("net invariant");
            let outs = Marking::from_names(&num, &t.outputs).expect("net invariant");
            (i, ins, outs)
        })
        .collect();

    let initial = Marking::from_names(&num, &net.initial_marking).expect("net invariant");
    let mut seen: HashSet<Marking> = HashSet::new();
    let mut order: Vec<Marking> = Vec::new();
    let mut queue: VecDeque<Marking> = VecDeque::new();
    seen.insert(initial.clone());
    order.push(initial.clone());
    queue.push_back(initial);

    while let Some(marking) = queue.pop_front() {
        for (t_idx, ins, outs) in &transitions {
            if !marking.superset_of(ins) {
                continue;
            }
            let removed = marking.minus(ins);
            if removed.intersects(outs) {
                let clash = removed
                    .numbers()
                    .into_iter()
                    .find(|&p| outs.contains(p))
                    .expect("intersection nonempty");
                return Err(ReachError::NotSafe {
                    transition: net.transitions[*t_idx].id.clone(),
                    place: num.place(clash).expect("valid number").to_string(),
                });
            }
            let next = removed.union(outs);
            if seen.insert(next.clone()) {
                if seen.len() > state_limit {
                    return Err(ReachError::StateLimitExceeded { limit: state_limit });
                }
                order.push(next.clone());
                queue.push_back(next);
            }
        }
    }
    Ok(order)
}

/// Symmetric irreflexive relation over places, stored as unordered pairs
/// of 1-based place numbers with the smaller number first.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConcurrencyRelation {
    pairs: BTreeSet<(u32, u32)>,
}

impl ConcurrencyRelation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (u32, u32)>) -> Self {
        let mut rel = Self::new();
        for (a, b) in pairs {
            rel.insert(a, b);
        }
        rel
    }

    pub fn insert(&mut self, a: u32, b: u32) {
        assert!(a != b, "concurrency relation is irreflexive");
        self.pairs.insert((a.min(b), a.max(b)));
    }

    pub fn contains(&self, a: u32, b: u32) -> bool {
        self.pairs.contains(&(a.min(b), a.max(b)))
    }

    /// Pairs `(a, b)` with `a < b`, ascending.
    pub fn pairs(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.pairs.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Conflict-graph degree of each place, indexed by place number - 1.
    pub fn degrees(&self, place_count: u32) -> Vec<u32> {
        let mut deg = vec![0u32; place_count as usize];
        for (a, b) in self.pairs() {
            deg[(a - 1) as usize] += 1;
            deg[(b - 1) as usize] += 1;
        }
        deg
    }

    /// Row-major adjacency matrix over place numbers 1..=place_count.
    pub fn adjacency(&self, place_count: u32) -> Vec<bool> {
        let n = place_count as usize;
        let mut adj = vec![false; n * n];
        for (a, b) in self.pairs() {
            let (i, j) = ((a - 1) as usize, (b - 1) as usize);
            adj[i * n + j] = true;
            adj[j * n + i] = true;
        }
        adj
    }
}

/// Builds the concurrency relation from a set of reachable markings:
/// `{p, p'}` is in the relation iff `p != p'` and some marking contains both.
pub fn concurrency_relation(markings: &[Marking]) -> ConcurrencyRelation {
    let mut rel = ConcurrencyRelation::new();
    for m in markings {
        let nums = m.numbers();
        for (i, &a) in nums.iter().enumerate() {
            for &b in &nums[i + 1..] {
                rel.insert(a, b);
            }
        }
    }
    rel
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConcParseError {
    #[error("line {line}: `{id}` is not a place of the net")]
    UnknownPlace { line: usize, id: String },
    #[error("line {line}: a place is never concurrent with itself (`{id} {id}`)")]
    SelfPair { line: usize, id: String },
    #[error("line {line}: expected exactly two place identifiers")]
    SyntaxError { line: usize },
}

/// Parses a `.conc` file: one `p1 p2` pair per line, order-insensitive,
/// duplicates ignored, `#` comments.
pub fn parse_conc(text: &str, num: &PlaceNumbering) -> Result<ConcurrencyRelation, ConcParseError> {
    let mut rel = ConcurrencyRelation::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        };
        let tokens: Vec<&str> = content.split_whitespace().collect();
        match tokens.as_slice() {
            [] => continue,
            [a, b] => {
                let lookup = |id: &str| {
                    num.number_of(id)
                        .ok_or_else(|| ConcParseError::UnknownPlace { line, id: id.to_string() })
                };
                let (na, nb) = (lookup(a)?, lookup(b)?);
                if na == nb {
                    return Err(ConcParseError::SelfPair { line, id: a.to_string() });
                }
                rel.insert(na, nb);
            }
            _ => return Err(ConcParseError::SyntaxError { line }),
        }
    }
    Ok(rel)
}

/// Renders a relation as `.conc` text, pairs ascending by place number.
pub fn print_conc(rel: &ConcurrencyRelation, num: &PlaceNumbering) -> String {
    let mut out = String::new();
    for (a, b) in rel.pairs() {
        writeln!(
            out,
            "{} {}",
            num.place(a).expect("pair within numbering"),
            num.place(b).expect("pair within numbering")
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::parse_net;
    use proptest::prelude::*;

    fn names(net: &PetriNet, m: &Marking) -> BTreeSet<String> {
        let num = crate::net::numbering(net);
        m.numbers().iter().map(|&k| num.place(k).unwrap().to_string()).collect()
    }

    fn as_name_sets(net: &PetriNet, ms: &[Marking]) -> BTreeSet<BTreeSet<String>> {
        ms.iter().map(|m| names(net, m)).collect()
    }

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn no_transitions_only_initial() {
        let net = parse_net("places p1 p2\nmarking p1 p2\n").unwrap();
        let ms = explore_reachable(&net, 100).unwrap();
        assert_eq!(as_name_sets(&net, &ms), BTreeSet::from([set(&["p1", "p2"])]));
    }

    #[test]
    fn chain_fires_once() {
        let net = parse_net("places p1 p2\ntransition t: p1 -> p2\nmarking p1\n").unwrap();
        let ms = explore_reachable(&net, 100).unwrap();
        assert_eq!(as_name_sets(&net, &ms), BTreeSet::from([set(&["p1"]), set(&["p2"])]));
    }

    // Independent check: breadth-first search over name-set markings,
    // written from the firing rule alone.
    fn brute_reachable(net: &PetriNet) -> BTreeSet<BTreeSet<String>> {
        let mut seen = BTreeSet::from([net.initial_marking.clone()]);
        let mut queue = vec![net.initial_marking.clone()];
        while let Some(m) = queue.pop() {
            for t in &net.transitions {
                if t.inputs.iter().all(|p| m.contains(p)) {
                    let mut next: BTreeSet<String> =
                        m.difference(&t.inputs).cloned().collect();
                    next.extend(t.outputs.iter().cloned());
                    if seen.insert(next.clone()) {
                        queue.push(next);
                    }
                }
            }
        }
        seen
    }

    #[test]
    fn fork_reaches_two_markings() {
        let net =
            parse_net("places p0 p1 p2\ntransition t: p0 -> p1 p2\nmarking p0\n").unwrap();
        let ms = explore_reachable(&net, 100).unwrap();
        let expected = brute_reachable(&net);
        assert_eq!(expected, BTreeSet::from([set(&["p0"]), set(&["p1", "p2"])]));
        assert_eq!(as_name_sets(&net, &ms), expected);
    }

    #[test]
    fn unsafe_firing_detected() {
        let net = parse_net("places p1 p2\ntransition t: p1 -> p2\nmarking p1 p2\n").unwrap();
        let err = explore_reachable(&net, 100).unwrap_err();
        assert_eq!(
            err,
            ReachError::NotSafe { transition: "t".to_string(), place: "p2".to_string() }
        );
    }

    #[test]
    fn self_loop_is_safe() {
        let net = parse_net("places p\ntransition t: p -> p\nmarking p\n").unwrap();
        let ms = explore_reachable(&net, 100).unwrap();
        assert_eq!(ms.len(), 1);
    }

    #[test]
    fn state_limit_enforced() {
        let net = parse_net("places p1 p2\ntransition t: p1 -> p2\nmarking p1\n").unwrap();
        assert_eq!(
            explore_reachable(&net, 1),
            Err(ReachError::StateLimitExceeded { limit: 1 })
        );
    }

    #[test]
    fn relation_from_joint_marking() {
        let m = Marking::from_numbers(2, [1, 2]);
        let rel = concurrency_relation(&[m]);
        assert_eq!(rel.pairs().collect::<Vec<_>>(), vec![(1, 2)]);
    }

    #[test]
    fn relation_empty_when_never_simultaneous() {
        let ms = vec![Marking::from_numbers(2, [1]), Marking::from_numbers(2, [2])];
        assert!(concurrency_relation(&ms).is_empty());
    }

    #[test]
    fn relation_of_fork() {
        let net =
            parse_net("places p0 p1 p2\ntransition t: p0 -> p1 p2\nmarking p0\n").unwrap();
        let ms = explore_reachable(&net, 100).unwrap();
        let rel = concurrency_relation(&ms);
        // p1 is number 2 and p2 is number 3
        assert_eq!(rel.pairs().collect::<Vec<_>>(), vec![(2, 3)]);
    }

    #[test]
    fn conc_file_round_trip() {
        let net = parse_net("places a b c\n").unwrap();
        let num = crate::net::numbering(&net);
        let rel = parse_conc("b a\na b # duplicate ignored\nc a\n", &num).unwrap();
        assert_eq!(rel.pairs().collect::<Vec<_>>(), vec![(1, 2), (1, 3)]);
        assert_eq!(print_conc(&rel, &num), "a b\na c\n");
    }

    #[test]
    fn conc_file_errors() {
        let net = parse_net("places a b\n").unwrap();
        let num = crate::net::numbering(&net);
        assert_eq!(
            parse_conc("a z\n", &num),
            Err(ConcParseError::UnknownPlace { line: 1, id: "z".to_string() })
        );
        assert_eq!(
            parse_conc("a a\n", &num),
            Err(ConcParseError::SelfPair { line: 1, id: "a".to_string() })
        );
        assert_eq!(parse_conc("a\n", &num), Err(ConcParseError::SyntaxError { line: 1 }));
    }

    fn arb_markings() -> impl Strategy<Value = Vec<Marking>> {
        let marking = prop::collection::btree_set(1u32..=8, 0..=8)
            .prop_map(|nums| Marking::from_numbers(8, nums));
        prop::collection::vec(marking, 1..6)
    }

    proptest! {
        #[test]
        fn relation_symmetric_irreflexive(ms in arb_markings()) {
            let rel = concurrency_relation(&ms);
            for (a, b) in rel.pairs() {
                prop_assert!(a < b);
                prop_assert!(rel.contains(b, a));
            }
        }

        #[test]
        fn relation_monotone_in_markings(ms in arb_markings(), extra in arb_markings()) {
            let base = concurrency_relation(&ms);
            let mut all = ms.clone();
            all.extend(extra);
            let bigger = concurrency_relation(&all);
            for (a, b) in base.pairs() {
                prop_assert!(bigger.contains(a, b));
            }
        }
    }
}

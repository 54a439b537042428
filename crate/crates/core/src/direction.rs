//! Directed-pair semantics of unidirectional cycles and direction assignment.
//!
//! A cycle provides the directed pair `(a, b)` when some occurrence of `a`
//! precedes some occurrence of `b` along the chosen traversal; the hub sits
//! at both ends, so it reaches and is reached by every on-cycle node, while
//! non-hub nodes only transmit downstream. The greedy passes pick each
//! cycle's orientation to eliminate missing pairs: an initialization sweep in
//! cycle order, then repeated update sweeps that flip a cycle only on strict
//! improvement until a full pass changes nothing.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::rng;
use crate::routing::CycleRoute;

pub type Pair = (usize, usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    fn index(self) -> usize {
        match self {
            Self::Forward => 0,
            Self::Backward => 1,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Forward => "F",
            Self::Backward => "B",
        })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DirectionError {
    #[error("empty solution: no cycles to direct")]
    EmptySolution,
    #[error("pair coverage is inconsistent with the assignment (rebuild mismatch)")]
    InconsistentCoverage,
}

/// Which nodes of a walk may form pairs.
#[derive(Clone, Copy)]
pub enum PairScope<'a> {
    /// Every distinct node on the walk transmits and receives (default; all
    /// on-trail nodes have channel access).
    AllOnCycle,
    /// Only the listed nodes count, one set per cycle in slice order
    /// (excludes pass-through nodes).
    MembersOnly(&'a [BTreeSet<usize>]),
}

impl PairScope<'_> {
    pub(crate) fn allowed(&self, cycle_pos: usize) -> Option<&BTreeSet<usize>> {
        match self {
            Self::AllOnCycle => None,
            Self::MembersOnly(sets) => Some(&sets[cycle_pos]),
        }
    }
}

/// Directed pairs formed by one traversal of the cycle.
pub fn ordered_pairs(c: &CycleRoute, d: Direction) -> BTreeSet<Pair> {
    ordered_pairs_within(c, d, None)
}

/// Like [`ordered_pairs`] but only `allowed` nodes (when given) may transmit
/// or receive.
pub fn ordered_pairs_within(
    c: &CycleRoute,
    d: Direction,
    allowed: Option<&BTreeSet<usize>>,
) -> BTreeSet<Pair> {
    let len = c.walk.len();
    // First and last traversal position per node; a node transmits from any
    // occurrence and receives at any occurrence.
    let mut first: Vec<(usize, usize)> = Vec::new();
    let mut last: Vec<(usize, usize)> = Vec::new();
    for pos in 0..len {
        let node = match d {
            Direction::Forward => c.walk[pos],
            Direction::Backward => c.walk[len - 1 - pos],
        };
        if allowed.is_some_and(|a| !a.contains(&node)) {
            continue;
        }
        match first.iter_mut().find(|(n, _)| *n == node) {
            None => {
                first.push((node, pos));
                last.push((node, pos));
            }
            Some(_) => {
                let entry = last.iter_mut().find(|(n, _)| *n == node).expect("seen");
                entry.1 = pos;
            }
        }
    }
    let mut pairs = BTreeSet::new();
    for &(a, fa) in &first {
        for &(b, lb) in &last {
            if a != b && fa < lb {
                pairs.insert((a, b));
            }
        }
    }
    pairs
}

/// Directed-pair occurrence counts over all `n x n` node pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairCoverage {
    n: usize,
    counts: Vec<u32>,
}

impl PairCoverage {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            counts: vec![0; n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn count(&self, i: usize, j: usize) -> u32 {
        self.counts[i * self.n + j]
    }

    pub fn is_covered(&self, i: usize, j: usize) -> bool {
        self.count(i, j) > 0
    }

    pub fn add_pairs<'a>(&mut self, pairs: impl IntoIterator<Item = &'a Pair>) {
        for &(i, j) in pairs {
            self.counts[i * self.n + j] += 1;
        }
    }

    pub fn remove_pairs<'a>(&mut self, pairs: impl IntoIterator<Item = &'a Pair>) {
        for &(i, j) in pairs {
            self.counts[i * self.n + j] -= 1;
        }
    }

    pub fn missing_count(&self) -> usize {
        let mut missing = 0;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j && self.count(i, j) == 0 {
                    missing += 1;
                }
            }
        }
        missing
    }

    pub fn missing_pairs(&self) -> BTreeSet<Pair> {
        let mut missing = BTreeSet::new();
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j && self.count(i, j) == 0 {
                    missing.insert((i, j));
                }
            }
        }
        missing
    }

    /// Rebuild from scratch using each cycle's stored direction flag.
    pub fn from_cycles(n: usize, cycles: &[CycleRoute], scope: PairScope<'_>) -> Self {
        let dirs: Vec<Direction> = cycles.iter().map(|c| c.direction).collect();
        Self::from_directed(n, cycles, &dirs, scope)
    }

    /// Rebuild from scratch using an explicit direction per cycle.
    pub fn from_directed(
        n: usize,
        cycles: &[CycleRoute],
        dirs: &[Direction],
        scope: PairScope<'_>,
    ) -> Self {
        let mut pc = Self::new(n);
        for (pos, (c, &d)) in cycles.iter().zip(dirs).enumerate() {
            pc.add_pairs(&ordered_pairs_within(c, d, scope.allowed(pos)));
        }
        pc
    }
}

/// Per-cycle direction choices plus the resulting uncovered pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectionAssignment {
    pub directions: Vec<Direction>,
    pub missing: BTreeSet<Pair>,
}

impl DirectionAssignment {
    pub fn apply_to(&self, cycles: &mut [CycleRoute]) {
        for (c, &d) in cycles.iter_mut().zip(&self.directions) {
            c.direction = d;
        }
    }
}

/// Hook for shadow-verification: called after every processed cycle with the
/// directions fixed so far and the incremental pair counts.
pub type StepObserver<'a> = &'a mut dyn FnMut(&[Direction], &PairCoverage);

fn pair_sets(cycles: &[CycleRoute], scope: PairScope<'_>) -> Vec<[Vec<Pair>; 2]> {
    cycles
        .iter()
        .enumerate()
        .map(|(pos, c)| {
            let allowed = scope.allowed(pos);
            [
                ordered_pairs_within(c, Direction::Forward, allowed)
                    .into_iter()
                    .collect(),
                ordered_pairs_within(c, Direction::Backward, allowed)
                    .into_iter()
                    .collect(),
            ]
        })
        .collect()
}

fn new_pair_count(pc: &PairCoverage, pairs: &[Pair]) -> usize {
    pairs.iter().filter(|&&(a, b)| !pc.is_covered(a, b)).count()
}

/// Initialization sweep: visits cycles in index order, counts the missing
/// pairs each orientation would newly cover, and keeps Forward on ties.
pub fn initial_cycle_direction(
    n: usize,
    cycles: &[CycleRoute],
) -> Result<(DirectionAssignment, PairCoverage), DirectionError> {
    initial_cycle_direction_with(n, cycles, PairScope::AllOnCycle, &mut |_, _| {})
}

pub fn initial_cycle_direction_with(
    n: usize,
    cycles: &[CycleRoute],
    scope: PairScope<'_>,
    observer: StepObserver<'_>,
) -> Result<(DirectionAssignment, PairCoverage), DirectionError> {
    if cycles.is_empty() {
        return Err(DirectionError::EmptySolution);
    }
    let sets = pair_sets(cycles, scope);
    let mut pc = PairCoverage::new(n);
    let mut directions = Vec::with_capacity(cycles.len());
    for set in &sets {
        let forward_new = new_pair_count(&pc, &set[0]);
        let backward_new = new_pair_count(&pc, &set[1]);
        let chosen = if forward_new >= backward_new {
            Direction::Forward
        } else {
            Direction::Backward
        };
        pc.add_pairs(&set[chosen.index()]);
        directions.push(chosen);
        observer(&directions, &pc);
    }
    let missing = pc.missing_pairs();
    Ok((DirectionAssignment { directions, missing }, pc))
}

/// Update sweeps: each cycle's pairs are pulled out of the counts, both
/// orientations are rescored, and the cycle flips only on strict improvement
/// (ties keep the current direction). Repeats until a full pass changes
/// nothing; every flip strictly reduces the missing-pair count, so the loop
/// terminates.
pub fn greedy_update_cycle_direction(
    cycles: &[CycleRoute],
    assignment: &DirectionAssignment,
    pc: PairCoverage,
) -> Result<(DirectionAssignment, PairCoverage), DirectionError> {
    greedy_update_cycle_direction_with(cycles, assignment, pc, PairScope::AllOnCycle, &mut |_, _| {})
}

pub fn greedy_update_cycle_direction_with(
    cycles: &[CycleRoute],
    assignment: &DirectionAssignment,
    mut pc: PairCoverage,
    scope: PairScope<'_>,
    observer: StepObserver<'_>,
) -> Result<(DirectionAssignment, PairCoverage), DirectionError> {
    if cycles.is_empty() {
        return Err(DirectionError::EmptySolution);
    }
    if assignment.directions.len() != cycles.len() {
        return Err(DirectionError::InconsistentCoverage);
    }
    let sets = pair_sets(cycles, scope);
    let rebuilt = PairCoverage::from_directed(pc.n, cycles, &assignment.directions, scope);
    if rebuilt != pc {
        return Err(DirectionError::InconsistentCoverage);
    }

    let mut directions = assignment.directions.clone();
    loop {
        let mut changed = false;
        for (i, set) in sets.iter().enumerate() {
            pc.remove_pairs(&set[directions[i].index()]);
            let forward_new = new_pair_count(&pc, &set[0]);
            let backward_new = new_pair_count(&pc, &set[1]);
            let chosen = if forward_new > backward_new {
                Direction::Forward
            } else if backward_new > forward_new {
                Direction::Backward
            } else {
                directions[i]
            };
            pc.add_pairs(&set[chosen.index()]);
            if chosen != directions[i] {
                directions[i] = chosen;
                changed = true;
            }
            observer(&directions, &pc);
        }
        if !changed {
            break;
        }
    }
    let missing = pc.missing_pairs();
    Ok((DirectionAssignment { directions, missing }, pc))
}

/// Baseline: every cycle keeps its routed (Forward) orientation.
pub fn assign_forward(n: usize, cycles: &[CycleRoute]) -> Result<DirectionAssignment, DirectionError> {
    assign_forward_with(n, cycles, PairScope::AllOnCycle)
}

pub fn assign_forward_with(
    n: usize,
    cycles: &[CycleRoute],
    scope: PairScope<'_>,
) -> Result<DirectionAssignment, DirectionError> {
    if cycles.is_empty() {
        return Err(DirectionError::EmptySolution);
    }
    let directions = vec![Direction::Forward; cycles.len()];
    let pc = PairCoverage::from_directed(n, cycles, &directions, scope);
    Ok(DirectionAssignment {
        directions,
        missing: pc.missing_pairs(),
    })
}

/// Baseline: an independent fair coin per cycle, deterministic per seed.
pub fn assign_random(
    n: usize,
    cycles: &[CycleRoute],
    seed: u64,
) -> Result<DirectionAssignment, DirectionError> {
    assign_random_with(n, cycles, seed, PairScope::AllOnCycle)
}

pub fn assign_random_with(
    n: usize,
    cycles: &[CycleRoute],
    seed: u64,
    scope: PairScope<'_>,
) -> Result<DirectionAssignment, DirectionError> {
    if cycles.is_empty() {
        return Err(DirectionError::EmptySolution);
    }
    let mut rng = rng::rng_from(seed);
    let directions: Vec<Direction> = (0..cycles.len())
        .map(|_| {
            if rng::coin(&mut rng) {
                Direction::Backward
            } else {
                Direction::Forward
            }
        })
        .collect();
    let pc = PairCoverage::from_directed(n, cycles, &directions, scope);
    Ok(DirectionAssignment {
        directions,
        missing: pc.missing_pairs(),
    })
}

/// Prior-art baseline: each cycle plus a twin of the same walk with the
/// reverse orientation.
pub fn expand_paired(cycles: &[CycleRoute]) -> Vec<CycleRoute> {
    let mut out = Vec::with_capacity(cycles.len() * 2);
    for c in cycles {
        let mut forward = c.clone();
        forward.direction = Direction::Forward;
        let mut backward = c.clone();
        backward.direction = Direction::Backward;
        out.push(forward);
        out.push(backward);
    }
    out
}

/// Uncovered directed pairs over the coverage's node universe.
pub fn missing_pairs(pc: &PairCoverage) -> BTreeSet<Pair> {
    pc.missing_pairs()
}

/// Missing pairs as a percentage of all `N(N-1)` directed pairs.
pub fn missing_percentage(missing_count: usize, n: usize) -> f64 {
    if n < 2 {
        return 0.0;
    }
    100.0 * missing_count as f64 / (n * (n - 1)) as f64
}

/// Dump: one line per cycle, `i F|B`.
pub fn dump_directions(assignment: &DirectionAssignment) -> String {
    let mut out = String::new();
    for (i, d) in assignment.directions.iter().enumerate() {
        out.push_str(&format!("{i} {d}\n"));
    }
    out
}

/// Dump: `i j` lines sorted lexicographically.
pub fn dump_missing(missing: &BTreeSet<Pair>) -> String {
    let mut out = String::new();
    for (i, j) in missing {
        out.push_str(&format!("{i} {j}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cycle(walk: &[usize]) -> CycleRoute {
        CycleRoute {
            quorum_index: 0,
            hub: walk[0],
            walk: walk.to_vec(),
            direction: Direction::Forward,
        }
    }

    fn pairs(list: &[(usize, usize)]) -> BTreeSet<Pair> {
        list.iter().copied().collect()
    }

    #[test]
    fn ordered_pairs_examples() {
        let c = cycle(&[0, 1, 2, 0]);
        assert_eq!(
            ordered_pairs(&c, Direction::Forward),
            pairs(&[(0, 1), (0, 2), (1, 2), (1, 0), (2, 0)])
        );
        assert_eq!(
            ordered_pairs(&c, Direction::Backward),
            pairs(&[(0, 2), (0, 1), (2, 1), (2, 0), (1, 0)])
        );
        let two = cycle(&[0, 1, 0]);
        assert_eq!(ordered_pairs(&two, Direction::Forward), pairs(&[(0, 1), (1, 0)]));
        assert_eq!(ordered_pairs(&two, Direction::Backward), pairs(&[(0, 1), (1, 0)]));
    }

    #[test]
    fn ordered_pairs_respects_scope() {
        let c = cycle(&[0, 1, 2, 0]);
        let allowed: BTreeSet<usize> = [0, 2].into_iter().collect();
        assert_eq!(
            ordered_pairs_within(&c, Direction::Forward, Some(&allowed)),
            pairs(&[(0, 2), (2, 0)])
        );
    }

    #[test]
    fn repeated_occurrences_use_best_positions() {
        // 1 appears at positions 1 and 3: it can still reach 2 (position 2)
        // via its first occurrence and hear 2 via its last.
        let c = cycle(&[0, 1, 2, 1, 0]);
        let got = ordered_pairs(&c, Direction::Forward);
        assert!(got.contains(&(1, 2)));
        assert!(got.contains(&(2, 1)));
    }

    #[test]
    fn initial_direction_single_triangle() {
        let (assignment, pc) = initial_cycle_direction(3, &[cycle(&[0, 1, 2, 0])]).unwrap();
        assert_eq!(assignment.directions, vec![Direction::Forward]);
        assert_eq!(assignment.missing, pairs(&[(2, 1)]));
        assert_eq!(pc.missing_count(), 1);
    }

    #[test]
    fn initial_direction_flips_second_copy() {
        let cycles = [cycle(&[0, 1, 2, 0]), cycle(&[0, 1, 2, 0])];
        let (assignment, _) = initial_cycle_direction(3, &cycles).unwrap();
        assert_eq!(
            assignment.directions,
            vec![Direction::Forward, Direction::Backward]
        );
        assert!(assignment.missing.is_empty());
    }

    #[test]
    fn initial_direction_two_node_cycle() {
        let (assignment, _) = initial_cycle_direction(2, &[cycle(&[0, 1, 0])]).unwrap();
        assert_eq!(assignment.directions, vec![Direction::Forward]);
        assert!(assignment.missing.is_empty());
    }

    #[test]
    fn greedy_update_keeps_fixed_point() {
        let cycles = [cycle(&[0, 1, 2, 0]), cycle(&[0, 1, 2, 0])];
        let (assignment, pc) = initial_cycle_direction(3, &cycles).unwrap();
        let mut steps = 0;
        let (updated, _) = greedy_update_cycle_direction_with(
            &cycles,
            &assignment,
            pc,
            PairScope::AllOnCycle,
            &mut |_, _| steps += 1,
        )
        .unwrap();
        assert_eq!(updated, assignment);
        assert_eq!(steps, 2); // one stable pass over both cycles
    }

    #[test]
    fn greedy_update_rejects_inconsistent_coverage() {
        let cycles = [cycle(&[0, 1, 2, 0])];
        let (assignment, _) = initial_cycle_direction(3, &cycles).unwrap();
        let stale = PairCoverage::new(3);
        assert_eq!(
            greedy_update_cycle_direction(&cycles, &assignment, stale).unwrap_err(),
            DirectionError::InconsistentCoverage
        );
    }

    /// Minimum missing over every direction combination (test oracle).
    fn exhaustive_best_missing(n: usize, cycles: &[CycleRoute]) -> usize {
        let k = cycles.len();
        (0..1u32 << k)
            .map(|mask| {
                let dirs: Vec<Direction> = (0..k)
                    .map(|i| {
                        if mask >> i & 1 == 1 {
                            Direction::Backward
                        } else {
                            Direction::Forward
                        }
                    })
                    .collect();
                PairCoverage::from_directed(n, cycles, &dirs, PairScope::AllOnCycle).missing_count()
            })
            .min()
            .expect("at least one combination")
    }

    #[test]
    fn greedy_matches_exhaustive_on_spec_instance() {
        let cycles = [
            cycle(&[0, 1, 2, 0]),
            cycle(&[0, 1, 3, 0]),
            cycle(&[1, 2, 3, 1]),
        ];
        let (assignment, pc) = initial_cycle_direction(4, &cycles).unwrap();
        let (updated, _) = greedy_update_cycle_direction(&cycles, &assignment, pc).unwrap();
        assert_eq!(updated.missing.len(), exhaustive_best_missing(4, &cycles));
    }

    #[test]
    fn assign_forward_examples() {
        let a = assign_forward(3, &[cycle(&[0, 1, 2, 0])]).unwrap();
        assert_eq!(a.directions, vec![Direction::Forward]);
        assert_eq!(a.missing, pairs(&[(2, 1)]));

        assert_eq!(
            assign_forward(3, &[]).unwrap_err(),
            DirectionError::EmptySolution
        );

        let a = assign_forward(2, &[cycle(&[0, 1, 0])]).unwrap();
        assert!(a.missing.is_empty());
    }

    #[test]
    fn assign_random_is_deterministic_and_fair() {
        let cycles: Vec<CycleRoute> = (0..1000).map(|_| cycle(&[0, 1, 0])).collect();
        let a = assign_random(2, &cycles, 11).unwrap();
        let b = assign_random(2, &cycles, 11).unwrap();
        assert_eq!(a, b);
        assert!(a.missing.is_empty());

        let mut fair_seeds = 0;
        for seed in 0..100 {
            let a = assign_random(2, &cycles, seed).unwrap();
            let forward = a
                .directions
                .iter()
                .filter(|&&d| d == Direction::Forward)
                .count();
            let fraction = forward as f64 / 1000.0;
            if (0.45..=0.55).contains(&fraction) {
                fair_seeds += 1;
            }
        }
        assert!(fair_seeds >= 95, "only {fair_seeds}/100 seeds were fair");
    }

    #[test]
    fn expand_paired_covers_both_orientations() {
        let twins = expand_paired(&[cycle(&[0, 1, 2, 0])]);
        assert_eq!(twins.len(), 2);
        let mut union = BTreeSet::new();
        for c in &twins {
            union.extend(ordered_pairs(c, c.direction));
        }
        assert_eq!(union.len(), 6);

        assert!(expand_paired(&[]).is_empty());
        assert_eq!(
            crate::routing::links_used(&twins, false),
            crate::routing::links_used(&[cycle(&[0, 1, 2, 0])], true)
        );
    }

    #[test]
    fn missing_pairs_examples() {
        let full = PairCoverage::from_cycles(3, &expand_paired(&[cycle(&[0, 1, 2, 0])]), PairScope::AllOnCycle);
        assert!(missing_pairs(&full).is_empty());
        assert_eq!(missing_percentage(full.missing_count(), 3), 0.0);

        let single = PairCoverage::from_cycles(3, &[cycle(&[0, 1, 2, 0])], PairScope::AllOnCycle);
        assert_eq!(missing_pairs(&single), pairs(&[(2, 1)]));
        assert!((missing_percentage(1, 3) - 16.666_666_666_666_668).abs() < 1e-12);

        assert_eq!(missing_pairs(&PairCoverage::new(3)).len(), 6);
    }

    #[test]
    fn dumps_are_stable() {
        let assignment = DirectionAssignment {
            directions: vec![Direction::Forward, Direction::Backward],
            missing: pairs(&[(2, 1), (0, 3)]),
        };
        assert_eq!(dump_directions(&assignment), "0 F\n1 B\n");
        assert_eq!(dump_missing(&assignment.missing), "0 3\n2 1\n");
    }

    /// Edge-simple closed walk with 1..=3 petals of fresh nodes around a hub.
    fn random_walk(seed: u64) -> CycleRoute {
        let mut rng = crate::rng::rng_from(seed);
        let hub = 0;
        let petals = 1 + crate::rng::uniform_index(&mut rng, 3);
        let mut walk = vec![hub];
        let mut next_node = 1;
        for _ in 0..petals {
            let span = 2 + crate::rng::uniform_index(&mut rng, 4);
            for _ in 0..span {
                walk.push(next_node);
                next_node += 1;
            }
            walk.push(hub);
        }
        CycleRoute {
            quorum_index: 0,
            hub,
            walk,
            direction: Direction::Forward,
        }
    }

    proptest! {
        /// The two traversals complement each other through the hub.
        #[test]
        fn directions_complement(seed in 0u64..500) {
            let c = random_walk(seed);
            let nodes = c.distinct_nodes();
            let mut union = ordered_pairs(&c, Direction::Forward);
            union.extend(ordered_pairs(&c, Direction::Backward));
            let mut all = BTreeSet::new();
            for &a in &nodes {
                for &b in &nodes {
                    if a != b {
                        all.insert((a, b));
                    }
                }
            }
            prop_assert_eq!(union, all);
        }

        /// Closed form for simple cycles on k distinct nodes.
        #[test]
        fn simple_cycle_pair_counts(k in 2usize..12) {
            let mut walk: Vec<usize> = (0..k).collect();
            walk.push(0);
            let c = cycle(&walk);
            for d in [Direction::Forward, Direction::Backward] {
                let covered = ordered_pairs(&c, d).len();
                prop_assert_eq!(covered, 2 * (k - 1) + (k - 1) * (k - 2) / 2);
                prop_assert_eq!(k * (k - 1) - covered, (k - 1) * (k - 2) / 2);
            }
        }

        /// The update pass never raises the missing count, finishes within
        /// n^2 passes, and its incremental counts match rebuilds.
        #[test]
        fn greedy_update_is_monotone_and_shadowed(seed in 0u64..150) {
            let mut rng = crate::rng::rng_from(seed);
            let count = 2 + crate::rng::uniform_index(&mut rng, 5);
            let cycles: Vec<CycleRoute> =
                (0..count).map(|i| random_walk(seed * 31 + i as u64)).collect();
            let n = cycles
                .iter()
                .flat_map(|c| c.walk.iter().copied())
                .max()
                .unwrap()
                + 1;
            let (initial, pc) = initial_cycle_direction(n, &cycles).unwrap();
            let before = initial.missing.len();
            let mut steps = 0usize;
            let cycles_ref = &cycles;
            let (updated, final_pc) = greedy_update_cycle_direction_with(
                cycles_ref,
                &initial,
                pc,
                PairScope::AllOnCycle,
                &mut |dirs, pc| {
                    steps += 1;
                    let rebuilt = PairCoverage::from_directed(
                        n,
                        &cycles_ref[..dirs.len().min(cycles_ref.len())],
                        &dirs[..dirs.len().min(cycles_ref.len())],
                        PairScope::AllOnCycle,
                    );
                    assert_eq!(&rebuilt, pc);
                },
            )
            .unwrap();
            prop_assert!(updated.missing.len() <= before);
            prop_assert!(steps / cycles.len() <= n * n);
            prop_assert_eq!(
                PairCoverage::from_directed(n, &cycles, &updated.directions, PairScope::AllOnCycle),
                final_pc
            );
        }
    }
}

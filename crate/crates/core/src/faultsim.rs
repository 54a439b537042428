//! Single-link fault injection and aggregate coverage statistics.
//!
//! A fault is an ordered hop `(u, v)`: one walk-order traversal of a topology
//! edge, standing in for one fiber direction or transmitter/receiver pair.
//! Under the default whole-cycle model a cycle is lost as soon as its stored
//! walk contains the failed hop — paired twins share a walk, so one fault
//! takes both — while a cycle routed over the same edge in the opposite hop
//! order is unaffected. The segment-survival model instead keeps the pairs
//! formed on each side of the break. Sweeps enumerate every hop used by at
//! least one cycle; unused edges are never swept.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::direction::{ordered_pairs_within, Direction, Pair, PairScope};
use crate::exec;
use crate::routing::CycleRoute;
use crate::topology::Topology;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FaultError {
    #[error("({u}, {v}) is not a topology edge")]
    UnknownEdge { u: usize, v: usize },
    #[error("empty solution: no cycles to sweep")]
    EmptySolution,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultModel {
    /// A cycle whose walk contains the failed hop contributes nothing.
    WholeCycle,
    /// A broken cycle keeps the pairs formed on each side of the break
    /// (exploration mode, off by default).
    SegmentSurvival,
}

impl std::str::FromStr for FaultModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "whole" => Ok(Self::WholeCycle),
            "segment" => Ok(Self::SegmentSurvival),
            other => Err(format!("unknown fault model {other:?}")),
        }
    }
}

/// Per-hop missing sets and the aggregate statistics of one sweep.
#[derive(Debug, Clone)]
pub struct FaultReport {
    /// Failed hop -> directed pairs left uncovered.
    pub per_edge: BTreeMap<(usize, usize), BTreeSet<Pair>>,
    /// Hops used by at least one cycle, sorted; exactly the sweep domain.
    pub edges_swept: Vec<(usize, usize)>,
    pub mean_missing: f64,
    /// `N(N-1)` directed pairs.
    pub total_pairs: usize,
    /// `1 - mean_missing / total_pairs`, in `[0, 1]`.
    pub coverage: f64,
}

pub struct SweepOutcome {
    pub report: FaultReport,
    /// Mean missing count after one-hop hub compensation, when requested.
    pub compensated_mean_missing: Option<f64>,
}

struct CycleData {
    hops: Vec<(usize, usize)>,
    pairs: Vec<Pair>,
    hub: usize,
}

fn cycle_data(cycles: &[CycleRoute], scope: PairScope<'_>) -> Vec<CycleData> {
    cycles
        .iter()
        .enumerate()
        .map(|(pos, c)| CycleData {
            hops: c.hops().collect(),
            pairs: ordered_pairs_within(c, c.direction, scope.allowed(pos))
                .into_iter()
                .collect(),
            hub: c.hub,
        })
        .collect()
}

/// Pairs formed inside one traversal fragment.
fn segment_pairs(nodes: &[usize], allowed: Option<&BTreeSet<usize>>, out: &mut Vec<Pair>) {
    let mut first: Vec<(usize, usize)> = Vec::new();
    let mut last: Vec<(usize, usize)> = Vec::new();
    for (pos, &node) in nodes.iter().enumerate() {
        if allowed.is_some_and(|a| !a.contains(&node)) {
            continue;
        }
        match first.iter().position(|&(n, _)| n == node) {
            None => {
                first.push((node, pos));
                last.push((node, pos));
            }
            Some(i) => last[i].1 = pos,
        }
    }
    for &(a, fa) in &first {
        for &(b, lb) in &last {
            if a != b && fa < lb {
                out.push((a, b));
            }
        }
    }
}

/// Pairs a broken cycle still forms: the break splits the traversal at the
/// failed hop and each fragment keeps its internal downstream pairs.
fn surviving_segment_pairs(
    c: &CycleRoute,
    hop: (usize, usize),
    allowed: Option<&BTreeSet<usize>>,
) -> Vec<Pair> {
    let edge_count = c.walk.len() - 1;
    let p = (0..edge_count)
        .find(|&i| (c.walk[i], c.walk[i + 1]) == hop)
        .expect("caller checked the walk contains the hop");
    let traversal: Vec<usize> = match c.direction {
        Direction::Forward => c.walk.clone(),
        Direction::Backward => c.walk.iter().rev().copied().collect(),
    };
    // Traversal crosses the failed hop between positions q and q+1.
    let q = match c.direction {
        Direction::Forward => p,
        Direction::Backward => edge_count - 1 - p,
    };
    let mut pairs = Vec::new();
    segment_pairs(&traversal[..=q], allowed, &mut pairs);
    segment_pairs(&traversal[q + 1..], allowed, &mut pairs);
    pairs.sort_unstable();
    pairs.dedup();
    pairs
}

/// Coverage grid plus surviving hubs under an optional fault.
fn covered_grid(
    n: usize,
    cycles: &[CycleRoute],
    data: &[CycleData],
    fault: Option<(usize, usize)>,
    model: FaultModel,
    scope: PairScope<'_>,
) -> (Vec<bool>, BTreeSet<usize>) {
    let mut grid = vec![false; n * n];
    let mut hubs = BTreeSet::new();
    for (pos, entry) in data.iter().enumerate() {
        let broken = fault.is_some_and(|hop| entry.hops.contains(&hop));
        if !broken {
            for &(a, b) in &entry.pairs {
                grid[a * n + b] = true;
            }
            hubs.insert(entry.hub);
        } else if model == FaultModel::SegmentSurvival {
            let hop = fault.expect("broken implies a fault");
            for (a, b) in surviving_segment_pairs(&cycles[pos], hop, scope.allowed(pos)) {
                grid[a * n + b] = true;
            }
        }
    }
    (grid, hubs)
}

fn grid_missing(n: usize, grid: &[bool]) -> BTreeSet<Pair> {
    let mut missing = BTreeSet::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && !grid[i * n + j] {
                missing.insert((i, j));
            }
        }
    }
    missing
}

fn grid_pairs(n: usize, grid: &[bool]) -> BTreeSet<Pair> {
    let mut covered = BTreeSet::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && grid[i * n + j] {
                covered.insert((i, j));
            }
        }
    }
    covered
}

/// Missing count after one-hop relay through surviving hubs.
fn compensated_missing_count(n: usize, grid: &[bool], hubs: &BTreeSet<usize>) -> usize {
    let mut missing = 0;
    for a in 0..n {
        for b in 0..n {
            if a == b || grid[a * n + b] {
                continue;
            }
            let relayed = hubs
                .iter()
                .any(|&h| h != a && h != b && grid[a * n + h] && grid[h * n + b]);
            if !relayed {
                missing += 1;
            }
        }
    }
    missing
}

/// Sorted distinct hops across all walks.
pub fn used_hops(cycles: &[CycleRoute]) -> Vec<(usize, usize)> {
    let set: BTreeSet<(usize, usize)> = cycles.iter().flat_map(|c| c.hops()).collect();
    set.into_iter().collect()
}

/// Directed pairs still covered when the given hop fails.
pub fn pairs_under_fault(
    t: &Topology,
    cycles: &[CycleRoute],
    failed: (usize, usize),
) -> Result<BTreeSet<Pair>, FaultError> {
    pairs_under_fault_with(t, cycles, failed, FaultModel::WholeCycle, PairScope::AllOnCycle)
}

pub fn pairs_under_fault_with(
    t: &Topology,
    cycles: &[CycleRoute],
    failed: (usize, usize),
    model: FaultModel,
    scope: PairScope<'_>,
) -> Result<BTreeSet<Pair>, FaultError> {
    if !t.has_edge(failed.0, failed.1) {
        return Err(FaultError::UnknownEdge {
            u: failed.0,
            v: failed.1,
        });
    }
    let data = cycle_data(cycles, scope);
    let (grid, _) = covered_grid(t.node_count(), cycles, &data, Some(failed), model, scope);
    Ok(grid_pairs(t.node_count(), &grid))
}

/// Fails every used hop once and aggregates the missing-pair statistics.
pub fn sweep_single_faults(t: &Topology, cycles: &[CycleRoute]) -> Result<FaultReport, FaultError> {
    sweep_single_faults_with(t, cycles, FaultModel::WholeCycle, PairScope::AllOnCycle, false)
        .map(|o| o.report)
}

pub fn sweep_single_faults_with(
    t: &Topology,
    cycles: &[CycleRoute],
    model: FaultModel,
    scope: PairScope<'_>,
    compensation: bool,
) -> Result<SweepOutcome, FaultError> {
    if cycles.is_empty() {
        return Err(FaultError::EmptySolution);
    }
    let n = t.node_count();
    let data = cycle_data(cycles, scope);
    let hops = used_hops(cycles);
    let evaluated: Vec<(BTreeSet<Pair>, usize)> = exec::map_slice(&hops, |&hop| {
        let (grid, hubs) = covered_grid(n, cycles, &data, Some(hop), model, scope);
        let missing = grid_missing(n, &grid);
        let compensated = if compensation {
            compensated_missing_count(n, &grid, &hubs)
        } else {
            0
        };
        (missing, compensated)
    });

    let total_pairs = n * (n - 1);
    let missing_sum: usize = evaluated.iter().map(|(m, _)| m.len()).sum();
    let mean_missing = missing_sum as f64 / hops.len() as f64;
    let coverage = 1.0 - mean_missing / total_pairs as f64;
    let compensated_mean_missing = compensation.then(|| {
        evaluated.iter().map(|&(_, c)| c as f64).sum::<f64>() / hops.len() as f64
    });
    let per_edge: BTreeMap<(usize, usize), BTreeSet<Pair>> = hops
        .iter()
        .copied()
        .zip(evaluated.into_iter().map(|(m, _)| m))
        .collect();
    Ok(SweepOutcome {
        report: FaultReport {
            per_edge,
            edges_swept: hops,
            mean_missing,
            total_pairs,
            coverage,
        },
        compensated_mean_missing,
    })
}

/// `100 * (1 - mean_missing / total_pairs)`; 100 is perfect coverage.
pub fn fault_coverage(report: &FaultReport) -> f64 {
    100.0 * report.coverage
}

/// One-hop O/E/O closure: adds `(a, b)` whenever some hub relays it.
pub fn compensated_pairs(covered: &BTreeSet<Pair>, hubs: &BTreeSet<usize>) -> BTreeSet<Pair> {
    let mut out = covered.clone();
    for &h in hubs {
        let senders: Vec<usize> = covered
            .iter()
            .filter(|&&(_, b)| b == h)
            .map(|&(a, _)| a)
            .collect();
        let receivers: Vec<usize> = covered
            .iter()
            .filter(|&&(a, _)| a == h)
            .map(|&(_, b)| b)
            .collect();
        for &a in &senders {
            for &b in &receivers {
                if a != b {
                    out.insert((a, b));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::direction::{expand_paired, ordered_pairs};
    use crate::topology::load_topology;
    use proptest::prelude::*;

    fn cycle(walk: &[usize]) -> CycleRoute {
        CycleRoute {
            quorum_index: 0,
            hub: walk[0],
            walk: walk.to_vec(),
            direction: Direction::Forward,
        }
    }

    fn triangle() -> Topology {
        load_topology("3\n0 1\n1 2\n2 0").unwrap()
    }

    fn pairs(list: &[(usize, usize)]) -> BTreeSet<Pair> {
        list.iter().copied().collect()
    }

    #[test]
    fn fault_on_used_hop_kills_the_cycle() {
        let covered = pairs_under_fault(&triangle(), &[cycle(&[0, 1, 2, 0])], (1, 2)).unwrap();
        assert!(covered.is_empty());
    }

    #[test]
    fn disjoint_survivor_keeps_its_pairs() {
        let t = load_topology("6\n0 1\n1 2\n2 0\n3 4\n4 5\n5 3").unwrap();
        let cycles = [cycle(&[0, 1, 2, 0]), cycle(&[3, 4, 5, 3])];
        let covered = pairs_under_fault(&t, &cycles, (0, 1)).unwrap();
        assert_eq!(covered, ordered_pairs(&cycles[1], Direction::Forward));
        assert_eq!(covered.len(), 5);
    }

    #[test]
    fn fault_on_unused_edge_is_a_noop() {
        let t = load_topology("4\n0 1\n1 2\n2 3\n3 0\n0 2").unwrap();
        let cycles = [cycle(&[0, 1, 2, 3, 0])];
        let covered = pairs_under_fault(&t, &cycles, (0, 2)).unwrap();
        assert_eq!(covered, ordered_pairs(&cycles[0], Direction::Forward));
    }

    #[test]
    fn unknown_edge_is_rejected() {
        assert_eq!(
            pairs_under_fault(&triangle(), &[cycle(&[0, 1, 2, 0])], (0, 9)).unwrap_err(),
            FaultError::UnknownEdge { u: 0, v: 9 }
        );
    }

    #[test]
    fn sweep_single_cycle_has_zero_coverage() {
        let report = sweep_single_faults(&triangle(), &[cycle(&[0, 1, 2, 0])]).unwrap();
        assert_eq!(report.edges_swept, vec![(0, 1), (1, 2), (2, 0)]);
        assert_eq!(report.mean_missing, 6.0);
        assert_eq!(report.total_pairs, 6);
        assert_eq!(report.coverage, 0.0);
        assert_eq!(fault_coverage(&report), 0.0);
    }

    #[test]
    fn sweep_paired_twins_die_together() {
        let twins = expand_paired(&[cycle(&[0, 1, 2, 0])]);
        let report = sweep_single_faults(&triangle(), &twins).unwrap();
        // Twins share the stored walk, so the sweep sees the same three hops
        // and every fault kills both.
        assert_eq!(report.edges_swept.len(), 3);
        assert_eq!(report.coverage, 0.0);
    }

    #[test]
    fn sweep_distinct_walks_leave_a_survivor() {
        let cycles = [cycle(&[0, 1, 2, 0]), cycle(&[0, 2, 1, 0])];
        let report = sweep_single_faults(&triangle(), &cycles).unwrap();
        assert_eq!(report.edges_swept.len(), 6);
        let missing = &report.per_edge[&(0, 1)];
        assert_eq!(missing, &pairs(&[(1, 2)]));
        assert_eq!(missing.len(), 1);
    }

    #[test]
    fn coverage_arithmetic() {
        let report = FaultReport {
            per_edge: BTreeMap::new(),
            edges_swept: vec![],
            mean_missing: 3.0,
            total_pairs: 182,
            coverage: 1.0 - 3.0 / 182.0,
        };
        assert!((fault_coverage(&report) - 98.35).abs() < 0.01);
    }

    #[test]
    fn segment_model_keeps_fragment_pairs() {
        let cycles = [cycle(&[0, 1, 2, 0])];
        let covered = pairs_under_fault_with(
            &triangle(),
            &cycles,
            (0, 1),
            FaultModel::SegmentSurvival,
            PairScope::AllOnCycle,
        )
        .unwrap();
        // Break before position 1: fragment [1, 2, 0] keeps its pairs.
        assert_eq!(covered, pairs(&[(1, 2), (1, 0), (2, 0)]));
    }

    #[test]
    fn segment_model_respects_backward_traversal() {
        let mut c = cycle(&[0, 1, 2, 0]);
        c.direction = Direction::Backward;
        let covered = pairs_under_fault_with(
            &triangle(),
            &[c],
            (0, 1),
            FaultModel::SegmentSurvival,
            PairScope::AllOnCycle,
        )
        .unwrap();
        // Backward traversal is [0, 2, 1, 0]; the hop (0, 1) is crossed on
        // the final step, leaving fragment [0, 2, 1].
        assert_eq!(covered, pairs(&[(0, 2), (0, 1), (2, 1)]));
    }

    #[test]
    fn compensation_examples() {
        let covered = pairs(&[(1, 0), (0, 2)]);
        let hubs: BTreeSet<usize> = [0].into_iter().collect();
        assert_eq!(
            compensated_pairs(&covered, &hubs),
            pairs(&[(1, 0), (0, 2), (1, 2)])
        );

        let all = pairs(&[(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)]);
        assert_eq!(compensated_pairs(&all, &hubs), all);

        let single = ordered_pairs(&cycle(&[0, 1, 2, 0]), Direction::Forward);
        let comp = compensated_pairs(&single, &hubs);
        assert!(comp.contains(&(2, 1)));
        assert_eq!(comp, all);
    }

    proptest! {
        /// Faults never add coverage.
        #[test]
        fn fault_coverage_is_subset_of_fault_free(hop_idx in 0usize..6) {
            let t = load_topology("4\n0 1\n1 2\n2 3\n3 0\n0 2\n1 3").unwrap();
            let cycles = [cycle(&[0, 1, 2, 3, 0]), cycle(&[0, 2, 1, 3, 0])];
            let data = cycle_data(&cycles, PairScope::AllOnCycle);
            let (grid, _) =
                covered_grid(4, &cycles, &data, None, FaultModel::WholeCycle, PairScope::AllOnCycle);
            let fault_free = grid_pairs(4, &grid);
            let hops = used_hops(&cycles);
            let hop = hops[hop_idx % hops.len()];
            let covered = pairs_under_fault(&t, &cycles, hop).unwrap();
            prop_assert!(covered.is_subset(&fault_free));
        }

        /// Removing a cycle never increases any per-hop covered set.
        #[test]
        fn removing_a_cycle_is_monotone(drop in 0usize..2, hop_idx in 0usize..6) {
            let t = load_topology("4\n0 1\n1 2\n2 3\n3 0\n0 2\n1 3").unwrap();
            let cycles = vec![cycle(&[0, 1, 2, 3, 0]), cycle(&[0, 2, 1, 3, 0])];
            let reduced: Vec<CycleRoute> = cycles
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != drop)
                .map(|(_, c)| c.clone())
                .collect();
            let hops = used_hops(&cycles);
            let hop = hops[hop_idx % hops.len()];
            let full = pairs_under_fault(&t, &cycles, hop).unwrap();
            let less = pairs_under_fault(&t, &reduced, hop).unwrap();
            prop_assert!(less.is_subset(&full));
        }

        /// Stored aggregate fields agree with the per-hop data.
        #[test]
        fn report_is_internally_consistent(seed in 0u64..50) {
            let t = load_topology("5\n0 1\n1 2\n2 3\n3 4\n4 0\n0 2\n1 3").unwrap();
            let mut rng = crate::rng::rng_from(seed);
            let walks = [
                vec![0, 1, 2, 3, 4, 0],
                vec![0, 2, 1, 3, 0],
                vec![1, 2, 3, 1],
            ];
            let picked = crate::rng::uniform_index(&mut rng, walks.len());
            let cycles = [cycle(&walks[picked]), cycle(&walks[(picked + 1) % 3])];
            let report = sweep_single_faults(&t, &cycles).unwrap();
            let recomputed: f64 = report
                .per_edge
                .values()
                .map(|m| m.len() as f64)
                .sum::<f64>()
                / report.edges_swept.len() as f64;
            prop_assert!((report.mean_missing - recomputed).abs() < 1e-12);
            prop_assert!(
                (report.coverage - (1.0 - recomputed / report.total_pairs as f64)).abs() < 1e-12
            );
        }

        /// Compensation is monotone, matches an independent closure, and is
        /// idempotent for a single hub.
        #[test]
        fn compensation_closure_properties(seed in 0u64..100) {
            let mut rng = crate::rng::rng_from(seed);
            let n = 5;
            let mut covered = BTreeSet::new();
            for a in 0..n {
                for b in 0..n {
                    if a != b && crate::rng::coin(&mut rng) {
                        covered.insert((a, b));
                    }
                }
            }
            let hub = crate::rng::uniform_index(&mut rng, n);
            let hubs: BTreeSet<usize> = [hub].into_iter().collect();
            let comp = compensated_pairs(&covered, &hubs);
            prop_assert!(covered.is_subset(&comp));

            // Independent one-hop closure definition.
            let mut expect = covered.clone();
            for a in 0..n {
                for b in 0..n {
                    if a != b && covered.contains(&(a, hub)) && covered.contains(&(hub, b)) {
                        expect.insert((a, b));
                    }
                }
            }
            prop_assert_eq!(&comp, &expect);
            prop_assert_eq!(compensated_pairs(&comp, &hubs), comp);
        }
    }
}

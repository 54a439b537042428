//! Cycle routing: every quorum becomes a closed, edge-simple walk through all
//! of its members, anchored at the hub.
//!
//! The router is a stand-in for the ECBRA heuristic referenced by the
//! quorum-cycle literature (the original is published as a black box), so
//! link counts downstream are trend targets rather than exact reproductions.
//! Members are visited in order of BFS hop distance from the hub (ties by
//! lowest node index); consecutive members are joined by shortest paths that
//! avoid already-used edges. When that greedy pass dead-ends, three
//! fallbacks run in turn: an ear splice grows a connected even-degree
//! subgraph by attaching members through two edge-disjoint trails (unit
//! max-flow) and walks its Euler circuit; a whole-graph parity repair
//! deletes shortest paths between odd-degree vertices and walks the hub
//! component; and a budgeted depth-first search over visit orders and leg
//! alternatives handles small stubborn instances. A detour-removal pass
//! shortens the result. Walks may revisit nodes but never reuse an
//! undirected edge. At quorum-typical member densities (sizes near
//! sqrt(R*N)) the tiers route every feasible instance seen in testing;
//! genuinely infeasible inputs (members straddling a bridge, parity traps
//! like K_{2,3}) report an error.

use std::collections::{BTreeSet, VecDeque};

use thiserror::Error;

use crate::direction::Direction;
use crate::exec;
use crate::quorum::QuorumSet;
use crate::rng;
use crate::topology::Topology;

/// Seeded attachment-order shuffles tried after the four deterministic
/// orders in the ear-splice fallback.
const SHUFFLED_ORDERS: usize = 8;

#[derive(Debug, Error)]
pub enum RoutingError {
    #[error("hub {hub} is not a quorum member")]
    HubNotMember { hub: usize },
    #[error("quorum needs at least 2 members, got {got}")]
    TooFewMembers { got: usize },
    #[error("member {node} out of range for {node_count} nodes")]
    MemberOutOfRange { node: usize, node_count: usize },
    #[error("member {member} is not reachable from hub {hub}")]
    Disconnected { hub: usize, member: usize },
    #[error("no edge-simple closed walk through the quorum from hub {hub}")]
    Infeasible { hub: usize },
    #[error("cycle {quorum_index}: {source}")]
    ForQuorum {
        quorum_index: usize,
        #[source]
        source: Box<RoutingError>,
    },
}

/// Closed edge-simple walk serving one quorum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleRoute {
    pub quorum_index: usize,
    pub hub: usize,
    /// `[hub, v_1, .., v_{L-1}, hub]`; consecutive entries are topology edges.
    pub walk: Vec<usize>,
    pub direction: Direction,
}

impl CycleRoute {
    /// Consecutive hops in stored walk order.
    pub fn hops(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.walk.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn distinct_nodes(&self) -> BTreeSet<usize> {
        self.walk.iter().copied().collect()
    }

    /// Number of links (edges) the walk occupies.
    pub fn edge_len(&self) -> usize {
        self.walk.len().saturating_sub(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RouteViolation {
    NotClosedAtHub,
    TooShort,
    EdgeReused { u: usize, v: usize },
    NotAnEdge { u: usize, v: usize },
    MemberMissing { node: usize },
}

/// Checks the four walk invariants plus member coverage.
pub fn validate_route(
    t: &Topology,
    c: &CycleRoute,
    members: &BTreeSet<usize>,
) -> Result<(), RouteViolation> {
    if c.walk.len() < 3 {
        return Err(RouteViolation::TooShort);
    }
    if c.walk.first() != Some(&c.hub) || c.walk.last() != Some(&c.hub) {
        return Err(RouteViolation::NotClosedAtHub);
    }
    let mut seen = BTreeSet::new();
    for (u, v) in c.hops() {
        if !t.has_edge(u, v) {
            return Err(RouteViolation::NotAnEdge { u, v });
        }
        if !seen.insert((u.min(v), u.max(v))) {
            return Err(RouteViolation::EdgeReused { u, v });
        }
    }
    let on_walk = c.distinct_nodes();
    for &m in members {
        if !on_walk.contains(&m) {
            return Err(RouteViolation::MemberMissing { node: m });
        }
    }
    Ok(())
}

/// BFS hop distances from `start` over edges not marked in `used`;
/// `usize::MAX` marks unreachable nodes.
fn bfs_avoiding(t: &Topology, start: usize, used: &[bool]) -> Vec<usize> {
    let mut dist = vec![usize::MAX; t.node_count()];
    dist[start] = 0;
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        for &v in t.neighbors(u) {
            let e = t.edge_index(u, v).expect("neighbor implies edge");
            if !used[e] && dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Deterministic shortest path avoiding `used` edges: each step picks the
/// lowest-index predecessor.
fn shortest_path_avoiding(
    t: &Topology,
    start: usize,
    goal: usize,
    used: &[bool],
) -> Option<Vec<usize>> {
    let dist = bfs_avoiding(t, start, used);
    if dist[goal] == usize::MAX {
        return None;
    }
    let mut path = vec![goal];
    let mut cur = goal;
    while dist[cur] != 0 {
        let step = dist[cur];
        let pred = t
            .neighbors(cur)
            .iter()
            .copied()
            .filter(|&w| {
                dist[w] != usize::MAX
                    && dist[w] + 1 == step
                    && !used[t.edge_index(cur, w).expect("neighbor implies edge")]
            })
            .min()
            .expect("BFS distance implies a predecessor");
        path.push(pred);
        cur = pred;
    }
    path.reverse();
    Some(path)
}

fn apply_path(t: &Topology, walk: &mut Vec<usize>, used: &mut [bool], path: &[usize]) -> Vec<usize> {
    let mut marked = Vec::with_capacity(path.len().saturating_sub(1));
    for w in path.windows(2) {
        let e = t.edge_index(w[0], w[1]).expect("path steps are edges");
        used[e] = true;
        marked.push(e);
        walk.push(w[1]);
    }
    marked
}

/// Greedy pass: members ordered once by full-graph distance from the hub,
/// joined leg by leg with edge-avoiding shortest paths.
fn greedy_attempt(t: &Topology, hub: usize, members: &BTreeSet<usize>) -> Option<Vec<usize>> {
    let blank = vec![false; t.edge_count()];
    let full_dist = bfs_avoiding(t, hub, &blank);
    let mut order: Vec<usize> = members.iter().copied().filter(|&m| m != hub).collect();
    order.sort_by_key(|&m| (full_dist[m], m));

    let mut used = blank;
    let mut walk = vec![hub];
    let mut current = hub;
    let mut covered: BTreeSet<usize> = BTreeSet::from([hub]);
    for target in order {
        if covered.contains(&target) {
            continue;
        }
        let path = shortest_path_avoiding(t, current, target, &used)?;
        covered.extend(path.iter().copied());
        apply_path(t, &mut walk, &mut used, &path);
        current = target;
    }
    let back = shortest_path_avoiding(t, current, hub, &used)?;
    apply_path(t, &mut walk, &mut used, &back);
    Some(walk)
}

/// Connected even-degree edge set under construction; its Euler circuit is
/// the cycle walk.
#[derive(Clone)]
struct EarState {
    in_sub: Vec<bool>,
    on_walk: Vec<bool>,
}

impl EarState {
    fn new(t: &Topology, hub: usize) -> Self {
        let mut on_walk = vec![false; t.node_count()];
        on_walk[hub] = true;
        Self {
            in_sub: vec![false; t.edge_count()],
            on_walk,
        }
    }

    fn commit(&mut self, t: &Topology, trail: &[usize]) {
        for w in trail.windows(2) {
            self.in_sub[t.edge_index(w[0], w[1]).expect("trail steps are edges")] = true;
        }
        for &v in trail {
            self.on_walk[v] = true;
        }
    }
}

/// Two edge-disjoint trails from `from` into the marked node set, avoiding
/// subgraph edges: two BFS augmentations of a unit flow, then a
/// flow-consuming decomposition. All choices are index-ordered.
fn two_disjoint_trails(
    t: &Topology,
    from: usize,
    targets: &[bool],
    in_sub: &[bool],
) -> Option<(Vec<usize>, Vec<usize>)> {
    // flow[e]: 0 none, 1 low->high, 2 high->low.
    let mut flow = vec![0u8; t.edge_count()];
    for _ in 0..2 {
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; t.node_count()];
        let mut seen = vec![false; t.node_count()];
        seen[from] = true;
        let mut queue = VecDeque::from([from]);
        let mut reached = None;
        'bfs: while let Some(u) = queue.pop_front() {
            for &v in t.neighbors(u) {
                let e = t.edge_index(u, v).expect("neighbor implies edge");
                if in_sub[e] || seen[v] {
                    continue;
                }
                let forward: u8 = if u < v { 1 } else { 2 };
                if flow[e] != 0 && flow[e] != 3 - forward {
                    continue; // saturated in our direction
                }
                seen[v] = true;
                parent[v] = Some((u, e));
                if targets[v] {
                    reached = Some(v);
                    break 'bfs;
                }
                queue.push_back(v);
            }
        }
        let mut v = reached?;
        while let Some((u, e)) = parent[v] {
            let forward: u8 = if u < v { 1 } else { 2 };
            flow[e] = if flow[e] == 3 - forward { 0 } else { forward };
            v = u;
        }
    }
    // Decompose the 2-unit flow into two trails; leftover circulation flow
    // is simply not consumed.
    let mut trails = Vec::with_capacity(2);
    for _ in 0..2 {
        let mut trail = vec![from];
        let mut cur = from;
        loop {
            let next = t.neighbors(cur).iter().copied().find(|&w| {
                let e = t.edge_index(cur, w).expect("neighbor implies edge");
                let forward: u8 = if cur < w { 1 } else { 2 };
                flow[e] == forward
            })?;
            let e = t.edge_index(cur, next).expect("neighbor implies edge");
            flow[e] = 0;
            trail.push(next);
            cur = next;
            if targets[cur] {
                break;
            }
        }
        trails.push(trail);
    }
    let second = trails.pop().expect("two trails");
    let first = trails.pop().expect("two trails");
    Some((first, second))
}

/// The subgraph stays usable iff every edge is reachable from the hub and
/// every already-attached node still carries degree.
fn subgraph_is_sound(t: &Topology, state: &EarState, hub: usize, required: &[usize]) -> bool {
    let mut seen = vec![false; t.node_count()];
    seen[hub] = true;
    let mut stack = vec![hub];
    while let Some(u) = stack.pop() {
        for &v in t.neighbors(u) {
            let e = t.edge_index(u, v).expect("neighbor implies edge");
            if state.in_sub[e] && !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    for (e, &(u, v)) in t.edges().iter().enumerate() {
        if state.in_sub[e] && (!seen[u] || !seen[v]) {
            return false;
        }
    }
    required.iter().all(|&m| m == hub || seen[m])
}

/// Trail-pair variants tried per attachment (each bans one edge of an
/// earlier failed pair).
const ATTACH_VARIANTS: usize = 24;

/// Inside-path variants tried per parity toggle.
const TOGGLE_VARIANTS: usize = 8;

fn mark_trail(t: &Topology, flags: &mut [bool], trail: &[usize]) {
    for w in trail.windows(2) {
        flags[t.edge_index(w[0], w[1]).expect("trail steps are edges")] = true;
    }
}

/// Attaches one member while keeping every subgraph degree even: two
/// edge-disjoint trails into the walk set, plus a parity bridge when the
/// trails land on different nodes (an outside path if one exists, otherwise
/// toggling a path inside the subgraph). Failed trail pairs are retried
/// with one of their edges banned, which redirects the flow elsewhere.
fn attach_member(
    t: &Topology,
    state: &mut EarState,
    hub: usize,
    required: &[usize],
    member: usize,
) -> bool {
    let mut bans: Vec<Option<usize>> = vec![None];
    let mut enqueued = BTreeSet::new();
    let mut cursor = 0;
    while cursor < bans.len() && cursor < ATTACH_VARIANTS {
        let mut banned = state.in_sub.clone();
        if let Some(e) = bans[cursor] {
            banned[e] = true;
        }
        cursor += 1;
        let Some((first, second)) = two_disjoint_trails(t, member, &state.on_walk, &banned)
        else {
            continue;
        };
        if try_splice(t, state, hub, required, &first, &second) {
            return true;
        }
        for trail in [&first, &second] {
            for w in trail.windows(2) {
                let e = t.edge_index(w[0], w[1]).expect("trail steps are edges");
                if enqueued.insert(e) {
                    bans.push(Some(e));
                }
            }
        }
    }
    false
}

/// Commits the trail pair if parity can be restored.
fn try_splice(
    t: &Topology,
    state: &mut EarState,
    hub: usize,
    required: &[usize],
    first: &[usize],
    second: &[usize],
) -> bool {
    let a = *first.last().expect("trail reaches a target");
    let b = *second.last().expect("trail reaches a target");
    if a == b {
        state.commit(t, first);
        state.commit(t, second);
        return true;
    }
    let mut banned = state.in_sub.clone();
    mark_trail(t, &mut banned, first);
    mark_trail(t, &mut banned, second);
    if let Some(bridge) = shortest_path_avoiding(t, a, b, &banned) {
        state.commit(t, first);
        state.commit(t, second);
        state.commit(t, &bridge);
        return true;
    }
    // Toggle an inside a-b path; try a few alternatives since removing the
    // wrong edges can orphan the hub or an attached member.
    let mut inside_bans: Vec<Option<usize>> = vec![None];
    let mut enqueued = BTreeSet::new();
    let mut cursor = 0;
    while cursor < inside_bans.len() && cursor < TOGGLE_VARIANTS {
        let mut blocked: Vec<bool> = state.in_sub.iter().map(|&used| !used).collect();
        if let Some(e) = inside_bans[cursor] {
            blocked[e] = true;
        }
        cursor += 1;
        let Some(toggled) = shortest_path_avoiding(t, a, b, &blocked) else {
            continue;
        };
        let mut trial = state.clone();
        for w in toggled.windows(2) {
            trial.in_sub[t.edge_index(w[0], w[1]).expect("path steps are edges")] = false;
        }
        trial.commit(t, first);
        trial.commit(t, second);
        // Dropped path edges may orphan nodes; recompute membership.
        let mut degree = vec![0usize; t.node_count()];
        for (e, &(u, v)) in t.edges().iter().enumerate() {
            if trial.in_sub[e] {
                degree[u] += 1;
                degree[v] += 1;
            }
        }
        for (v, &deg) in degree.iter().enumerate() {
            trial.on_walk[v] = deg > 0 || v == hub;
        }
        if subgraph_is_sound(t, &trial, hub, required) {
            *state = trial;
            return true;
        }
        for w in toggled.windows(2) {
            let e = t.edge_index(w[0], w[1]).expect("path steps are edges");
            if enqueued.insert(e) {
                inside_bans.push(Some(e));
            }
        }
    }
    false
}

/// Euler circuit of the subgraph from `start` (iterative Hierholzer,
/// lowest-index edge first).
fn euler_walk(t: &Topology, in_sub: &[bool], start: usize) -> Vec<usize> {
    let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); t.node_count()];
    for (e, &(u, v)) in t.edges().iter().enumerate() {
        if in_sub[e] {
            adjacency[u].push((v, e));
            adjacency[v].push((u, e));
        }
    }
    let mut cursor = vec![0usize; t.node_count()];
    let mut used = vec![false; t.edge_count()];
    let mut stack = vec![start];
    let mut out = Vec::new();
    while let Some(&v) = stack.last() {
        let mut advanced = false;
        while cursor[v] < adjacency[v].len() {
            let (w, e) = adjacency[v][cursor[v]];
            if used[e] {
                cursor[v] += 1;
                continue;
            }
            used[e] = true;
            stack.push(w);
            advanced = true;
            break;
        }
        if !advanced {
            out.push(v);
            stack.pop();
        }
    }
    out.reverse();
    out
}

/// Fallback construction: grow a connected even subgraph covering the
/// members, trying several attachment orders, then walk its Euler circuit.
fn ear_splice(t: &Topology, members: &BTreeSet<usize>, hub: usize) -> Option<Vec<usize>> {
    let others: Vec<usize> = members.iter().copied().filter(|&m| m != hub).collect();
    let blank = vec![false; t.edge_count()];
    let hub_dist = bfs_avoiding(t, hub, &blank);

    for variant in 0..4 + SHUFFLED_ORDERS {
        let mut state = EarState::new(t, hub);
        let mut pending: Vec<usize> = others.clone();
        let mut attached = vec![hub];
        match variant {
            2 => pending.sort_by_key(|&m| (hub_dist[m], m)),
            3 => {
                pending.sort_by_key(|&m| (hub_dist[m], m));
                pending.reverse();
            }
            v if v >= 4 => {
                let seed = rng::derive_seed(hub as u64, "route-order", (v - 4) as u64);
                rng::shuffle(&mut rng::rng_from(seed), &mut pending);
            }
            _ => {}
        }
        let mut ok = true;
        while ok && !pending.is_empty() {
            let next = match variant {
                // Dynamic orders: nearest (0) or farthest (1) from the
                // current walk set, over edges still outside the subgraph.
                0 | 1 => {
                    let dist = multi_source_distance(t, &state);
                    let chosen = if variant == 0 {
                        pending.iter().min_by_key(|&&m| (dist[m], m)).copied()
                    } else {
                        pending
                            .iter()
                            .filter(|&&m| dist[m] != usize::MAX)
                            .max_by_key(|&&m| (dist[m], usize::MAX - m))
                            .copied()
                            .or_else(|| pending.first().copied())
                    };
                    chosen.expect("pending is non-empty")
                }
                _ => pending[0],
            };
            attached.push(next);
            if !state.on_walk[next] {
                ok = attach_member(t, &mut state, hub, &attached, next);
            }
            pending.retain(|&m| m != next);
        }
        if ok && state.in_sub.iter().any(|&x| x) {
            let walk = euler_walk(t, &state.in_sub, hub);
            if walk.first() == walk.last() && walk.len() >= 3 {
                return Some(walk);
            }
        }
    }
    None
}

/// Pairing-order variants tried by the whole-graph parity repair.
const EVENIZE_VARIANTS: usize = 12;

/// Dense member sets strand the ear splice; repairing the whole graph works
/// the other way around: delete shortest paths between odd-degree vertices
/// until every degree is even, then walk the Euler circuit of the hub's
/// component (the detour pass afterwards discards unneeded loops).
fn evenized_walk(t: &Topology, members: &BTreeSet<usize>, hub: usize) -> Option<Vec<usize>> {
    let base_odd: Vec<usize> = (0..t.node_count())
        .filter(|&v| t.neighbors(v).len() % 2 == 1)
        .collect();
    for variant in 0..EVENIZE_VARIANTS {
        let mut removed = vec![false; t.edge_count()];
        let mut odd_flag = vec![false; t.node_count()];
        let mut order = base_odd.clone();
        if variant > 0 {
            let seed = rng::derive_seed(hub as u64, "evenize-order", variant as u64);
            rng::shuffle(&mut rng::rng_from(seed), &mut order);
        }
        for &v in &order {
            odd_flag[v] = true;
        }
        let keeps_members = |removed: &[bool]| {
            let reach = bfs_avoiding(t, hub, removed);
            members.iter().all(|&m| reach[m] != usize::MAX)
                && t.neighbors(hub)
                    .iter()
                    .any(|&v| !removed[t.edge_index(hub, v).expect("neighbor implies edge")])
        };
        let mut ok = true;
        for &start in &order {
            if !odd_flag[start] {
                continue;
            }
            // Nearby odd partners over surviving edges; a deletion is only
            // committed if the hub component still spans every member. The
            // path deletion flips exactly the two endpoint parities.
            let dist = bfs_avoiding(t, start, &removed);
            let mut candidates: Vec<usize> = (0..t.node_count())
                .filter(|&v| v != start && odd_flag[v] && dist[v] != usize::MAX)
                .collect();
            candidates.sort_by_key(|&v| (dist[v], v));
            candidates.truncate(12);
            let mut committed = false;
            for &partner in &candidates {
                let path = shortest_path_avoiding(t, start, partner, &removed)
                    .expect("partner reachable");
                let mut trial = removed.clone();
                for w in path.windows(2) {
                    trial[t.edge_index(w[0], w[1]).expect("path steps are edges")] = true;
                }
                if keeps_members(&trial) {
                    removed = trial;
                    odd_flag[start] = false;
                    odd_flag[partner] = false;
                    committed = true;
                    break;
                }
            }
            if !committed {
                ok = false;
                break;
            }
        }
        if !ok {
            continue;
        }
        let surviving: Vec<bool> = removed.iter().map(|&r| !r).collect();
        let walk = euler_walk(t, &surviving, hub);
        if walk.first() == walk.last() && walk.len() >= 3 {
            return Some(walk);
        }
    }
    None
}

/// Path-extension attempts granted to the depth-first fallback per cycle.
const SEARCH_BUDGET: usize = 10_000;

/// Alternative paths considered per leg during the depth-first fallback.
const LEG_ALTERNATIVES: usize = 6;

/// Last-resort depth-first search over member visit orders and per-leg path
/// alternatives; edge bans accumulate along a branch, so it reaches walks
/// the single-ban ear splice cannot.
struct Searcher<'a> {
    t: &'a Topology,
    hub: usize,
    budget: usize,
}

impl Searcher<'_> {
    /// Shortest path plus single-edge deviations, ordered by (length, lex).
    fn leg_candidates(&self, from: usize, to: usize, used: &[bool]) -> Vec<Vec<usize>> {
        let Some(first) = shortest_path_avoiding(self.t, from, to, used) else {
            return Vec::new();
        };
        let mut seen = BTreeSet::from([first.clone()]);
        for w in first.windows(2) {
            let e = self.t.edge_index(w[0], w[1]).expect("path steps are edges");
            let mut banned = used.to_vec();
            banned[e] = true;
            if let Some(alt) = shortest_path_avoiding(self.t, from, to, &banned) {
                seen.insert(alt);
            }
        }
        let mut candidates: Vec<Vec<usize>> = seen.into_iter().collect();
        candidates.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        candidates.truncate(LEG_ALTERNATIVES);
        candidates
    }

    fn dfs(
        &mut self,
        walk: &mut Vec<usize>,
        used: &mut Vec<bool>,
        remaining: &BTreeSet<usize>,
        current: usize,
    ) -> Option<Vec<usize>> {
        if remaining.is_empty() {
            if self.budget == 0 {
                return None;
            }
            self.budget -= 1;
            let back = shortest_path_avoiding(self.t, current, self.hub, used)?;
            let mut done = walk.clone();
            let mut scratch = used.clone();
            apply_path(self.t, &mut done, &mut scratch, &back);
            return Some(done);
        }
        let dist = bfs_avoiding(self.t, current, used);
        let mut targets: Vec<(usize, usize)> = remaining
            .iter()
            .copied()
            .filter(|&m| dist[m] != usize::MAX)
            .map(|m| (dist[m], m))
            .collect();
        targets.sort_unstable();
        for (_, target) in targets {
            for path in self.leg_candidates(current, target, used) {
                if self.budget == 0 {
                    return None;
                }
                self.budget -= 1;
                let before = walk.len();
                let marked = apply_path(self.t, walk, used, &path);
                let next: BTreeSet<usize> = remaining
                    .iter()
                    .copied()
                    .filter(|m| !path.contains(m))
                    .collect();
                if let Some(done) = self.dfs(walk, used, &next, target) {
                    return Some(done);
                }
                for e in marked {
                    used[e] = false;
                }
                walk.truncate(before);
            }
        }
        None
    }
}

fn backtrack_walk(t: &Topology, members: &BTreeSet<usize>, hub: usize) -> Option<Vec<usize>> {
    let mut searcher = Searcher {
        t,
        hub,
        budget: SEARCH_BUDGET,
    };
    let remaining: BTreeSet<usize> = members.iter().copied().filter(|&m| m != hub).collect();
    searcher.dfs(
        &mut vec![hub],
        &mut vec![false; t.edge_count()],
        &remaining,
        hub,
    )
}

/// BFS distance from the current walk set over non-subgraph edges.
fn multi_source_distance(t: &Topology, state: &EarState) -> Vec<usize> {
    let mut dist = vec![usize::MAX; t.node_count()];
    let mut queue = VecDeque::new();
    for (v, &on) in state.on_walk.iter().enumerate() {
        if on {
            dist[v] = 0;
            queue.push_back(v);
        }
    }
    while let Some(u) = queue.pop_front() {
        for &v in t.neighbors(u) {
            let e = t.edge_index(u, v).expect("neighbor implies edge");
            if !state.in_sub[e] && dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Removes closed detours that carry no member the rest of the walk still
/// covers; scans left to right and cuts the widest detour first.
fn remove_detours(walk: &mut Vec<usize>, members: &BTreeSet<usize>) {
    loop {
        let mut cut: Option<(usize, usize)> = None;
        'scan: for i in 0..walk.len() {
            for j in (i + 1..walk.len()).rev() {
                if walk[i] != walk[j] {
                    continue;
                }
                let kept = walk.len() - (j - i);
                if kept < 3 {
                    continue;
                }
                let survivors: BTreeSet<usize> = walk[..=i]
                    .iter()
                    .chain(walk[j + 1..].iter())
                    .copied()
                    .collect();
                if members.iter().all(|m| survivors.contains(m)) {
                    cut = Some((i, j));
                    break 'scan;
                }
            }
        }
        match cut {
            Some((i, j)) => {
                walk.drain(i + 1..=j);
            }
            None => break,
        }
    }
}

fn plan_walk(
    t: &Topology,
    members: &BTreeSet<usize>,
    hub: usize,
) -> Result<Vec<usize>, RoutingError> {
    if members.len() < 2 {
        return Err(RoutingError::TooFewMembers { got: members.len() });
    }
    if let Some(&node) = members.iter().find(|&&m| m >= t.node_count()) {
        return Err(RoutingError::MemberOutOfRange {
            node,
            node_count: t.node_count(),
        });
    }
    if !members.contains(&hub) {
        return Err(RoutingError::HubNotMember { hub });
    }
    let blank = vec![false; t.edge_count()];
    let full_dist = bfs_avoiding(t, hub, &blank);
    if let Some(&member) = members.iter().find(|&&m| full_dist[m] == usize::MAX) {
        return Err(RoutingError::Disconnected { hub, member });
    }

    let walk = greedy_attempt(t, hub, members)
        .or_else(|| ear_splice(t, members, hub))
        .or_else(|| evenized_walk(t, members, hub))
        .or_else(|| backtrack_walk(t, members, hub));
    match walk {
        Some(mut walk) => {
            remove_detours(&mut walk, members);
            Ok(walk)
        }
        None => Err(RoutingError::Infeasible { hub }),
    }
}

/// Routes one quorum as a closed edge-simple walk; direction starts Forward.
pub fn route_cycle(
    t: &Topology,
    members: &BTreeSet<usize>,
    hub: usize,
) -> Result<CycleRoute, RoutingError> {
    let walk = plan_walk(t, members, hub)?;
    let route = CycleRoute {
        quorum_index: 0,
        hub,
        walk,
        direction: Direction::Forward,
    };
    debug_assert_eq!(validate_route(t, &route, members), Ok(()));
    Ok(route)
}

/// Routes every rotation of the quorum set; cycle `i` is hubbed at the base's
/// first member shifted by `i`.
pub fn route_all(t: &Topology, qs: &QuorumSet) -> Result<Vec<CycleRoute>, RoutingError> {
    let routed = exec::map_indices(qs.len(), |i| {
        let members: BTreeSet<usize> = qs.quorums()[i].iter().copied().collect();
        plan_walk(t, &members, qs.hub(i)).map(|walk| CycleRoute {
            quorum_index: i,
            hub: qs.hub(i),
            walk,
            direction: Direction::Forward,
        })
    });
    routed
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            r.map_err(|e| RoutingError::ForQuorum {
                quorum_index: i,
                source: Box::new(e),
            })
        })
        .collect()
}

/// Total links occupied by the solution; `paired` doubles the figure to
/// account for each cycle's reverse twin.
pub fn links_used(cycles: &[CycleRoute], paired: bool) -> usize {
    let single: usize = cycles.iter().map(CycleRoute::edge_len).sum();
    if paired {
        2 * single
    } else {
        single
    }
}

/// Debug/golden dump: one line per cycle, `i hub: v0 v1 .. v0`.
pub fn dump_cycles(cycles: &[CycleRoute]) -> String {
    let mut out = String::new();
    for c in cycles {
        out.push_str(&format!("{} {}:", c.quorum_index, c.hub));
        for v in &c.walk {
            out.push_str(&format!(" {v}"));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quorum::{QuorumBase, QuorumSet};
    use crate::topology::load_topology;
    use proptest::prelude::*;

    fn members(list: &[usize]) -> BTreeSet<usize> {
        list.iter().copied().collect()
    }

    #[test]
    fn triangle_routes_around() {
        let t = load_topology("3\n0 1\n1 2\n2 0").unwrap();
        let c = route_cycle(&t, &members(&[0, 1, 2]), 0).unwrap();
        assert_eq!(c.walk, vec![0, 1, 2, 0]);
    }

    #[test]
    fn ring_pair_uses_whole_ring() {
        let t = load_topology("4\n0 1\n1 2\n2 3\n3 0").unwrap();
        let c = route_cycle(&t, &members(&[0, 2]), 0).unwrap();
        assert!(c.walk == vec![0, 1, 2, 3, 0] || c.walk == vec![0, 3, 2, 1, 0]);
    }

    #[test]
    fn bridge_pair_is_infeasible() {
        let t = load_topology("3\n0 1\n1 2").unwrap();
        assert!(matches!(
            route_cycle(&t, &members(&[0, 2]), 0),
            Err(RoutingError::Infeasible { hub: 0 })
        ));
    }

    #[test]
    fn disconnected_member_is_reported() {
        let t = load_topology("6\n0 1\n1 2\n2 0\n3 4\n4 5\n5 3").unwrap();
        assert!(matches!(
            route_cycle(&t, &members(&[0, 4]), 0),
            Err(RoutingError::Disconnected { hub: 0, member: 4 })
        ));
    }

    #[test]
    fn precondition_violations_are_errors() {
        let t = load_topology("3\n0 1\n1 2\n2 0").unwrap();
        assert!(matches!(
            route_cycle(&t, &members(&[1, 2]), 0),
            Err(RoutingError::HubNotMember { hub: 0 })
        ));
        assert!(matches!(
            route_cycle(&t, &members(&[0]), 0),
            Err(RoutingError::TooFewMembers { got: 1 })
        ));
        assert!(matches!(
            route_cycle(&t, &members(&[0, 9]), 0),
            Err(RoutingError::MemberOutOfRange { node: 9, .. })
        ));
    }

    #[test]
    fn route_all_applies_hub_rule() {
        let t = load_topology("3\n0 1\n1 2\n2 0").unwrap();
        let qs = QuorumSet::generate(QuorumBase::new(3, vec![0, 1], 1).unwrap());
        let cycles = route_all(&t, &qs).unwrap();
        assert_eq!(cycles.len(), 3);
        assert_eq!(
            cycles.iter().map(|c| c.hub).collect::<Vec<_>>(),
            vec![0, 1, 2]
        );
        for (i, c) in cycles.iter().enumerate() {
            assert_eq!(c.quorum_index, i);
            assert_eq!(c.direction, Direction::Forward);
        }
    }

    #[test]
    fn route_all_annotates_failures_with_quorum_index() {
        let t = load_topology("3\n0 1\n1 2").unwrap();
        let qs = QuorumSet::generate(QuorumBase::new(3, vec![0, 2], 1).unwrap());
        match route_all(&t, &qs) {
            Err(RoutingError::ForQuorum { quorum_index: 0, .. }) => {}
            other => panic!("expected annotated failure, got {other:?}"),
        }
    }

    #[test]
    fn links_used_examples() {
        let t = load_topology("3\n0 1\n1 2\n2 0").unwrap();
        let c = route_cycle(&t, &members(&[0, 1, 2]), 0).unwrap();
        assert_eq!(links_used(std::slice::from_ref(&c), false), 3);
        assert_eq!(links_used(&[c], true), 6);

        let a = CycleRoute {
            quorum_index: 0,
            hub: 0,
            walk: vec![0, 1, 2, 0],
            direction: Direction::Forward,
        };
        let b = CycleRoute {
            quorum_index: 1,
            hub: 0,
            walk: vec![0, 1, 2, 3, 4, 0],
            direction: Direction::Forward,
        };
        assert_eq!(links_used(&[a, b], false), 8);
    }

    #[test]
    fn routing_is_deterministic() {
        let t = load_topology("6\n0 1\n1 2\n2 3\n3 4\n4 5\n5 0\n0 3\n1 4").unwrap();
        let first = route_cycle(&t, &members(&[0, 2, 4]), 0).unwrap();
        let second = route_cycle(&t, &members(&[0, 2, 4]), 0).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn dump_format_is_stable() {
        let c = CycleRoute {
            quorum_index: 2,
            hub: 1,
            walk: vec![1, 2, 0, 1],
            direction: Direction::Forward,
        };
        assert_eq!(dump_cycles(&[c]), "2 1: 1 2 0 1\n");
    }

    /// Chorded ring: 2-edge-connected by construction.
    fn chorded_ring(n: usize, chords: &[(usize, usize)]) -> Topology {
        let mut edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        edges.extend_from_slice(chords);
        crate::topology::Topology::new(n, edges, "ring").unwrap()
    }

    proptest! {
        #[test]
        fn routed_cycles_satisfy_invariants(seed in 0u64..200) {
            let t = chorded_ring(10, &[(0, 4), (2, 7), (5, 9), (1, 6)]);
            let mut rng = crate::rng::rng_from(seed);
            let mut picks: Vec<usize> = (0..10).collect();
            crate::rng::shuffle(&mut rng, &mut picks);
            let size = 2 + crate::rng::uniform_index(&mut rng, 5);
            let set: BTreeSet<usize> = picks[..size].iter().copied().collect();
            let hub = *set.iter().next().unwrap();
            let route = route_cycle(&t, &set, hub).unwrap();
            prop_assert_eq!(validate_route(&t, &route, &set), Ok(()));
        }
    }
}

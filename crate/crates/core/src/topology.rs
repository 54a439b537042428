//! Undirected fiber-network model: edge-list ingestion, node relabelings,
//! and the bridge screen used before cycle routing.
//!
//! Nodes are dense indices `0..N`. The edge-list format is: first
//! non-comment line holds `N`, every following non-empty non-comment line
//! holds one `u v` edge; `#` starts a comment; LF or CRLF both parse. The
//! serializer emits LF with edges sorted lexicographically.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::rng;

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("line {line}: expected {expected}, found {found:?}")]
    Parse {
        line: usize,
        expected: &'static str,
        found: String,
    },
    #[error("node count must be positive")]
    EmptyNodeSet,
    #[error("missing node-count header")]
    MissingHeader,
    #[error("self-loop at node {node}")]
    SelfLoop { node: usize },
    #[error("duplicate edge ({u}, {v})")]
    DuplicateEdge { u: usize, v: usize },
    #[error("node index {node} out of range for {node_count} nodes")]
    NodeOutOfRange { node: usize, node_count: usize },
    #[error("permutation has length {got}, topology has {want} nodes")]
    MappingLengthMismatch { got: usize, want: usize },
    #[error("permutation is not a bijection on 0..{n}")]
    NotAPermutation { n: usize },
}

/// Immutable undirected graph over nodes `0..node_count`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    node_count: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
    name: String,
}

impl Topology {
    pub fn new(
        node_count: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
        name: impl Into<String>,
    ) -> Result<Self, TopologyError> {
        if node_count == 0 {
            return Err(TopologyError::EmptyNodeSet);
        }
        let mut normalized: Vec<(usize, usize)> = Vec::new();
        let mut seen = BTreeSet::new();
        for (u, v) in edges {
            if u >= node_count || v >= node_count {
                return Err(TopologyError::NodeOutOfRange {
                    node: u.max(v),
                    node_count,
                });
            }
            if u == v {
                return Err(TopologyError::SelfLoop { node: u });
            }
            let edge = (u.min(v), u.max(v));
            if !seen.insert(edge) {
                return Err(TopologyError::DuplicateEdge {
                    u: edge.0,
                    v: edge.1,
                });
            }
            normalized.push(edge);
        }
        normalized.sort_unstable();
        let mut adjacency = vec![Vec::new(); node_count];
        for &(u, v) in &normalized {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Self {
            node_count,
            edges: normalized,
            adjacency,
            name: name.into(),
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges normalized as `(min, max)`, sorted lexicographically.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.node_count && self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Position of the normalized edge in [`Self::edges`].
    pub fn edge_index(&self, u: usize, v: usize) -> Option<usize> {
        let edge = (u.min(v), u.max(v));
        self.edges.binary_search(&edge).ok()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Edge-list document; LF line endings, edges sorted lexicographically.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.node_count);
        for &(u, v) in &self.edges {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }
}

/// Bijective node relabeling together with the seed that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeMapping {
    permutation: Vec<usize>,
    seed: u64,
}

impl NodeMapping {
    pub fn new(permutation: Vec<usize>, seed: u64) -> Result<Self, TopologyError> {
        let n = permutation.len();
        let mut seen = vec![false; n];
        for &p in &permutation {
            if p >= n || seen[p] {
                return Err(TopologyError::NotAPermutation { n });
            }
            seen[p] = true;
        }
        Ok(Self { permutation, seed })
    }

    pub fn identity(n: usize, seed: u64) -> Self {
        Self {
            permutation: (0..n).collect(),
            seed,
        }
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn map(&self, node: usize) -> usize {
        self.permutation[node]
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.permutation.len()];
        for (i, &p) in self.permutation.iter().enumerate() {
            inv[p] = i;
        }
        Self {
            permutation: inv,
            seed: self.seed,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.permutation.iter().enumerate().all(|(i, &p)| i == p)
    }
}

/// Parses an edge-list document. The caller names the topology separately if
/// it wants anything other than the empty label.
pub fn load_topology(text: &str) -> Result<Topology, TopologyError> {
    let mut node_count: Option<usize> = None;
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        match node_count {
            None => {
                let first = fields.next().expect("non-empty line has a field");
                if fields.next().is_some() {
                    return Err(TopologyError::Parse {
                        line: idx + 1,
                        expected: "a single node count",
                        found: line.to_string(),
                    });
                }
                let n: usize = first.parse().map_err(|_| TopologyError::Parse {
                    line: idx + 1,
                    expected: "node count",
                    found: first.to_string(),
                })?;
                if n == 0 {
                    return Err(TopologyError::EmptyNodeSet);
                }
                node_count = Some(n);
            }
            Some(_) => {
                let parse = |field: Option<&str>| -> Result<usize, TopologyError> {
                    let field = field.ok_or(TopologyError::Parse {
                        line: idx + 1,
                        expected: "\"u v\" edge line",
                        found: line.to_string(),
                    })?;
                    field.parse().map_err(|_| TopologyError::Parse {
                        line: idx + 1,
                        expected: "node index",
                        found: field.to_string(),
                    })
                };
                let u = parse(fields.next())?;
                let v = parse(fields.next())?;
                if fields.next().is_some() {
                    return Err(TopologyError::Parse {
                        line: idx + 1,
                        expected: "\"u v\" edge line",
                        found: line.to_string(),
                    });
                }
                edges.push((u, v));
            }
        }
    }
    let node_count = node_count.ok_or(TopologyError::MissingHeader)?;
    Topology::new(node_count, edges, "")
}

/// Relabels every edge `(u, v)` to `(m[u], m[v])`.
pub fn apply_mapping(t: &Topology, m: &NodeMapping) -> Result<Topology, TopologyError> {
    if m.permutation.len() != t.node_count {
        return Err(TopologyError::MappingLengthMismatch {
            got: m.permutation.len(),
            want: t.node_count,
        });
    }
    let edges = t.edges.iter().map(|&(u, v)| (m.map(u), m.map(v)));
    Topology::new(t.node_count, edges, t.name.clone())
}

/// Deterministic family of relabelings for the input-variation sweeps. The
/// first mapping is always the identity so the unmapped topology is included;
/// the rest are Fisher-Yates shuffles, one independent stream per index.
pub fn generate_mappings(n: usize, count: usize, seed: u64) -> Vec<NodeMapping> {
    (0..count)
        .map(|i| {
            let stream = rng::derive_seed(seed, "mapping", i as u64);
            if i == 0 {
                NodeMapping::identity(n, stream)
            } else {
                let mut perm: Vec<usize> = (0..n).collect();
                rng::shuffle(&mut rng::rng_from(stream), &mut perm);
                NodeMapping { permutation: perm, seed: stream }
            }
        })
        .collect()
}

/// Bridge scan (iterative low-link). Returns whether any bridge exists and
/// the normalized, sorted list of bridges.
pub fn has_bridge(t: &Topology) -> (bool, Vec<(usize, usize)>) {
    let n = t.node_count;
    let mut visit_time = vec![usize::MAX; n];
    let mut low = vec![usize::MAX; n];
    let mut clock = 0usize;
    let mut bridges = Vec::new();

    // Stack frames: (node, parent-edge index into t.edges, neighbor cursor).
    for root in 0..n {
        if visit_time[root] != usize::MAX {
            continue;
        }
        visit_time[root] = clock;
        low[root] = clock;
        clock += 1;
        let mut stack: Vec<(usize, Option<usize>, usize)> = vec![(root, None, 0)];
        while !stack.is_empty() {
            let top = stack.len() - 1;
            let (node, parent_edge, cursor) = stack[top];
            if cursor < t.adjacency[node].len() {
                stack[top].2 += 1;
                let next = t.adjacency[node][cursor];
                let edge = t.edge_index(node, next).expect("adjacency matches edges");
                if Some(edge) == parent_edge {
                    continue;
                }
                if visit_time[next] == usize::MAX {
                    visit_time[next] = clock;
                    low[next] = clock;
                    clock += 1;
                    stack.push((next, Some(edge), 0));
                } else {
                    low[node] = low[node].min(visit_time[next]);
                }
            } else {
                stack.pop();
                if let Some(&(parent, _, _)) = stack.last() {
                    low[parent] = low[parent].min(low[node]);
                    if low[node] > visit_time[parent] {
                        bridges.push((parent.min(node), parent.max(node)));
                    }
                }
            }
        }
    }
    bridges.sort_unstable();
    (!bridges.is_empty(), bridges)
}

/// True when the whole graph is connected and bridge-free.
pub fn is_two_edge_connected(t: &Topology) -> bool {
    if t.node_count > 1 {
        // Connectivity first: a lone isolated node is not covered by bridges.
        let mut seen = vec![false; t.node_count];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut reached = 1;
        while let Some(u) = stack.pop() {
            for &v in t.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    reached += 1;
                    stack.push(v);
                }
            }
        }
        if reached != t.node_count {
            return false;
        }
    }
    !has_bridge(t).0
}

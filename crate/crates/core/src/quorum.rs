//! Cyclic quorum sets: rotation generation, R-redundant verification through
//! difference multiplicities, and minimal-base search.
//!
//! A base `B` over `Z_N` spawns `N` quorums by rotation. The number of
//! rotations containing both residues `i` and `j` equals the multiplicity of
//! the difference `(i - j) mod N` among ordered pairs of the base, so the
//! all-pairs redundancy test reduces to checking that every difference in
//! `1..N` reaches the required multiplicity.

use std::fmt::Write as _;

use itertools::Itertools;

use thiserror::Error;

use crate::exec;
use crate::rng;

#[derive(Debug, Error)]
pub enum QuorumError {
    #[error("population must have at least {min} nodes, got {got}")]
    PopulationTooSmall { min: usize, got: usize },
    #[error("redundancy must be at least 1")]
    ZeroRedundancy,
    #[error("base members must be distinct residues in 0..{n}")]
    InvalidMembers { n: usize },
    #[error("rotation index {index} out of range for population {n}")]
    RotationOutOfRange { index: usize, n: usize },
    #[error(
        "redundancy {r} is infeasible for {n} nodes: even the full residue set \
         only places every pair in {n} of the {n} rotations"
    )]
    Infeasible { n: usize, r: usize },
    #[error("randomized search exhausted its budget of {budget} scored candidates")]
    BudgetExhausted { budget: u64 },
    #[error("base file line {line}: {reason}")]
    BaseFile { line: usize, reason: String },
}

/// Base residue set with its population size and required redundancy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuorumBase {
    n: usize,
    members: Vec<usize>,
    redundancy: usize,
}

impl QuorumBase {
    pub fn new(n: usize, mut members: Vec<usize>, redundancy: usize) -> Result<Self, QuorumError> {
        if n == 0 {
            return Err(QuorumError::PopulationTooSmall { min: 1, got: 0 });
        }
        if redundancy == 0 {
            return Err(QuorumError::ZeroRedundancy);
        }
        members.sort_unstable();
        let distinct = members.windows(2).all(|w| w[0] < w[1]);
        if members.is_empty() || !distinct || *members.last().unwrap() >= n {
            return Err(QuorumError::InvalidMembers { n });
        }
        Ok(Self { n, members, redundancy })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Strictly increasing residues.
    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn redundancy(&self) -> usize {
        self.redundancy
    }

    /// File-format line: `N R k m_0 .. m_{k-1}`.
    pub fn to_line(&self) -> String {
        let mut line = format!("{} {} {}", self.n, self.redundancy, self.size());
        for &m in &self.members {
            let _ = write!(line, " {m}");
        }
        line
    }
}

/// The `N` rotations of a base.
#[derive(Debug, Clone)]
pub struct QuorumSet {
    base: QuorumBase,
    quorums: Vec<Vec<usize>>,
}

impl QuorumSet {
    pub fn generate(base: QuorumBase) -> Self {
        let quorums = (0..base.n)
            .map(|i| rotate(&base.members, base.n, i))
            .collect();
        Self { base, quorums }
    }

    pub fn base(&self) -> &QuorumBase {
        &self.base
    }

    /// Sorted residue sets, one per rotation.
    pub fn quorums(&self) -> &[Vec<usize>] {
        &self.quorums
    }

    /// Hub of rotation `i`: the base's first member shifted by `i`.
    pub fn hub(&self, i: usize) -> usize {
        (self.base.members[0] + i) % self.base.n
    }

    pub fn len(&self) -> usize {
        self.quorums.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quorums.is_empty()
    }
}

fn rotate(members: &[usize], n: usize, shift: usize) -> Vec<usize> {
    let mut rotated: Vec<usize> = members.iter().map(|&x| (x + shift) % n).collect();
    rotated.sort_unstable();
    rotated
}

/// Rotation `{(x + i) mod N}` of the base, as a sorted residue set.
pub fn rotate_quorum(base: &QuorumBase, i: usize) -> Result<Vec<usize>, QuorumError> {
    if i >= base.n {
        return Err(QuorumError::RotationOutOfRange { index: i, n: base.n });
    }
    Ok(rotate(&base.members, base.n, i))
}

/// Multiplicity of every nonzero difference among ordered member pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DifferenceProfile {
    n: usize,
    lambda: Vec<usize>,
}

impl DifferenceProfile {
    pub fn lambda(&self, d: usize) -> usize {
        self.lambda[d % self.n]
    }

    /// Minimum multiplicity over differences `1..N`; `usize::MAX` when the
    /// population has no nonzero difference (N = 1).
    pub fn min_lambda(&self) -> usize {
        self.lambda[1..].iter().copied().min().unwrap_or(usize::MAX)
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// `lambda(d) = |{(x, y) : x != y in members, (x - y) mod n = d}|`.
pub fn difference_multiplicity(members: &[usize], n: usize) -> DifferenceProfile {
    let mut lambda = vec![0usize; n];
    for &x in members {
        for &y in members {
            if x != y {
                lambda[(x + n - y) % n] += 1;
            }
        }
    }
    DifferenceProfile { n, lambda }
}

/// True iff every unordered residue pair co-occurs in at least `redundancy`
/// of the base's rotations.
pub fn verify_redundancy(base: &QuorumBase) -> bool {
    difference_multiplicity(&base.members, base.n).min_lambda() >= base.redundancy
}

/// Pairs inside one quorum of size `k`: `k(k-1)/2`.
pub fn pair_count(k: u64) -> u64 {
    k * k.saturating_sub(1) / 2
}

/// Pairs across all `n` quorums of size `k`: `n * k(k-1)/2`.
pub fn total_pair_count(n: u64, k: u64) -> u64 {
    n * pair_count(k)
}

/// Growth estimate for the enlarged quorum size: `ceil(sqrt(r) * k)`.
pub fn sizing_estimate(k: usize, r: usize) -> usize {
    ((r as f64).sqrt() * k as f64).ceil() as usize
}

/// Smallest `k` whose pair supply can meet the demand: `k(k-1) >= r(n-1)`.
pub fn counting_lower_bound(n: usize, r: usize) -> usize {
    let demand = (r * (n - 1)) as u64;
    let mut k = 2u64;
    while k * (k - 1) < demand {
        k += 1;
    }
    (k as usize).min(n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchStrategy {
    Exhaustive,
    Randomized,
}

impl std::str::FromStr for SearchStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exhaustive" => Ok(Self::Exhaustive),
            "randomized" => Ok(Self::Randomized),
            other => Err(format!("unknown search strategy {other:?}")),
        }
    }
}

/// Finds a verified base of minimal size.
///
/// The exhaustive strategy fixes residue 0 in the base (rotation invariance),
/// walks subset sizes upward from the counting lower bound, and within a size
/// enumerates candidates in lexicographic order; the first verified candidate
/// is returned, so the result size is provably minimal and ties break
/// lexicographically. The randomized strategy runs restart hill-climbing on
/// single-element swaps scored by the total deficit
/// `sum_d max(0, R - lambda(d))` and returns the first verified base at the
/// smallest size it reaches; `budget` caps the number of scored candidates
/// and is split evenly across candidate sizes. Both strategies are
/// deterministic for fixed arguments.
pub fn find_min_redundant_base(
    n: usize,
    r: usize,
    strategy: SearchStrategy,
    seed: u64,
    budget: u64,
) -> Result<QuorumBase, QuorumError> {
    if n < 3 {
        return Err(QuorumError::PopulationTooSmall { min: 3, got: n });
    }
    if r == 0 {
        return Err(QuorumError::ZeroRedundancy);
    }
    if r > n {
        // The full residue set places every pair in exactly n rotations, so
        // no base of any size can reach a higher redundancy.
        return Err(QuorumError::Infeasible { n, r });
    }
    match strategy {
        SearchStrategy::Exhaustive => Ok(exhaustive_search(n, r)),
        SearchStrategy::Randomized => randomized_search(n, r, seed, budget),
    }
}

fn exhaustive_search(n: usize, r: usize) -> QuorumBase {
    for k in counting_lower_bound(n, r)..=n {
        if let Some(members) = search_size_exhaustive(n, r, k) {
            return QuorumBase::new(n, members, r).expect("search output is a valid base");
        }
    }
    unreachable!("the full residue set verifies whenever r <= n");
}

/// Lexicographically first verified `k`-subset containing 0, if any.
/// Parallelizes over the second member; chunk order preserves the global
/// lexicographic order.
fn search_size_exhaustive(n: usize, r: usize, k: usize) -> Option<Vec<usize>> {
    if k == 1 {
        return None;
    }
    let verified = |members: &[usize]| difference_multiplicity(members, n).min_lambda() >= r;
    if k == n {
        let all: Vec<usize> = (0..n).collect();
        return verified(&all).then_some(all);
    }
    // Candidates are [0, c, rest...] with rest drawn from c+1..n.
    exec::find_map_first(1..n, |c| {
        if n - c < k - 1 {
            return None;
        }
        let mut members = vec![0usize; k];
        members[1] = c;
        if k == 2 {
            return verified(&members).then_some(members);
        }
        ((c + 1)..n).combinations(k - 2).find_map(|rest| {
            members[2..].copy_from_slice(&rest);
            verified(&members).then(|| members.clone())
        })
    })
}

fn deficit(members: &[usize], n: usize, r: usize) -> usize {
    let profile = difference_multiplicity(members, n);
    (1..n).map(|d| r.saturating_sub(profile.lambda(d))).sum()
}

fn randomized_search(n: usize, r: usize, seed: u64, budget: u64) -> Result<QuorumBase, QuorumError> {
    let k_lo = counting_lower_bound(n, r);
    let sizes = (n - k_lo + 1) as u64;
    let quota = (budget / sizes).max(1);
    let mut rng = rng::rng_from(rng::derive_seed(seed, "quorum-search", 0));
    let mut spent = 0u64; // scored candidates, across all sizes
    for k in k_lo..=n {
        let size_end = spent.saturating_add(quota);
        while spent < size_end && spent < budget {
            // Restart from a random k-subset containing 0.
            let mut pool: Vec<usize> = (1..n).collect();
            rng::shuffle(&mut rng, &mut pool);
            let mut members: Vec<usize> = std::iter::once(0)
                .chain(pool[..k - 1].iter().copied())
                .collect();
            members.sort_unstable();
            let mut current = deficit(&members, n, r);
            spent += 1;
            while current > 0 && spent < budget {
                // Best single swap of a nonzero member for a non-member;
                // ties break on the lexicographically least (out, in) pair.
                let mut best: Option<(usize, usize, usize)> = None;
                let mut in_set = vec![false; n];
                for &m in &members {
                    in_set[m] = true;
                }
                'moves: for &out in members.iter().filter(|&&m| m != 0) {
                    for (cand, _) in in_set.iter().enumerate().filter(|(_, &used)| !used) {
                        let mut trial: Vec<usize> =
                            members.iter().copied().filter(|&m| m != out).collect();
                        trial.push(cand);
                        trial.sort_unstable();
                        let score = deficit(&trial, n, r);
                        spent += 1;
                        if best.is_none_or(|(s, _, _)| score < s) {
                            best = Some((score, out, cand));
                        }
                        if spent >= budget {
                            break 'moves;
                        }
                    }
                }
                match best {
                    Some((score, out, cand)) if score < current => {
                        members.retain(|&m| m != out);
                        members.push(cand);
                        members.sort_unstable();
                        current = score;
                    }
                    _ => break, // local minimum; restart
                }
            }
            if current == 0 {
                return QuorumBase::new(n, members, r);
            }
        }
        if spent >= budget {
            return Err(QuorumError::BudgetExhausted { budget });
        }
    }
    Err(QuorumError::BudgetExhausted { budget })
}

/// Parses a base-set document: lines `N R k m_0 .. m_{k-1}`, `#` comments.
/// Every line is re-verified; an unverifiable line is an error.
pub fn load_bases(text: &str) -> Result<Vec<QuorumBase>, QuorumError> {
    let mut bases = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<usize> = line
            .split_whitespace()
            .map(|f| {
                f.parse::<usize>().map_err(|_| QuorumError::BaseFile {
                    line: idx + 1,
                    reason: format!("non-numeric field {f:?}"),
                })
            })
            .collect::<Result<_, _>>()?;
        if fields.len() < 4 {
            return Err(QuorumError::BaseFile {
                line: idx + 1,
                reason: "expected \"N R k m_0 .. m_{k-1}\"".to_string(),
            });
        }
        let (n, r, k) = (fields[0], fields[1], fields[2]);
        let members = fields[3..].to_vec();
        if members.len() != k {
            return Err(QuorumError::BaseFile {
                line: idx + 1,
                reason: format!("declared {k} members, found {}", members.len()),
            });
        }
        let base = QuorumBase::new(n, members, r).map_err(|e| QuorumError::BaseFile {
            line: idx + 1,
            reason: e.to_string(),
        })?;
        if !verify_redundancy(&base) {
            return Err(QuorumError::BaseFile {
                line: idx + 1,
                reason: format!("base does not verify at redundancy {r}"),
            });
        }
        bases.push(base);
    }
    Ok(bases)
}

/// First base matching the population and redundancy exactly.
pub fn find_base(bases: &[QuorumBase], n: usize, r: usize) -> Option<&QuorumBase> {
    bases.iter().find(|b| b.n == n && b.redundancy == r)
}

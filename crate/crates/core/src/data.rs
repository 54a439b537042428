//! Bundled inputs: the four backbone topologies (edge lists transcribed
//! approximately; node and link counts match the published captions) and
//! precomputed verified quorum bases for their sizes.

use crate::quorum::{load_bases, QuorumBase};
use crate::topology::{load_topology, Topology};

pub const NSFNET: &str = include_str!("../data/nsfnet.txt");
pub const ARPANET: &str = include_str!("../data/arpanet.txt");
pub const AMERICAN: &str = include_str!("../data/american.txt");
pub const CHINESE: &str = include_str!("../data/chinese.txt");

/// Verified bases for N in {14, 20, 24, 54}, R in {1, 2, 3}.
pub const BASES: &str = include_str!("../data/bases.txt");

pub fn shipped_topologies() -> Vec<Topology> {
    [
        ("nsfnet", NSFNET),
        ("arpanet", ARPANET),
        ("american", AMERICAN),
        ("chinese", CHINESE),
    ]
    .into_iter()
    .map(|(name, text)| {
        load_topology(text)
            .expect("bundled topology parses")
            .with_name(name)
    })
    .collect()
}

pub fn shipped_bases() -> Vec<QuorumBase> {
    load_bases(BASES).expect("bundled bases verify")
}

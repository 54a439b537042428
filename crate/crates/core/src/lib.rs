//! Quorum-cycle planning for mesh networks.
//!
//! The pipeline: generate an R-redundant cyclic quorum set over the N nodes
//! of a topology ([`quorum`]), route each quorum as a closed edge-simple walk
//! hubbed at its first member ([`routing`]), pick each cycle's traversal
//! direction to eliminate missing directed pairs ([`direction`]), then
//! measure fault-free coverage and single-link fault tolerance against the
//! paired-cycle and forward/random baselines ([`faultsim`], [`experiment`]).
//!
//! With the default `parallel` feature the sweeps fan out via rayon; building
//! with `--no-default-features` runs the identical computation sequentially.

pub mod data;
pub mod direction;
pub mod exec;
pub mod experiment;
pub mod faultsim;
pub mod quorum;
pub mod rng;
pub mod routing;
pub mod topology;

pub use direction::{Direction, DirectionAssignment, PairCoverage, PairScope};
pub use quorum::{QuorumBase, QuorumSet, SearchStrategy};
pub use routing::CycleRoute;
pub use topology::{NodeMapping, Topology};

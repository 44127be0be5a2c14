//! Catalytic-space algorithms for graph connectivity and random walks.
//!
//! Every algorithm here borrows a [`CatalyticTape`] of arbitrary contents,
//! computes with it as scratch memory, and hands it back bit-for-bit
//! unchanged, while its own workspace stays logarithmic.

pub mod connectivity;
pub mod graph;
mod metrics;
pub mod oracles;
pub mod random_walk;
pub mod tape;

pub use connectivity::{
    connect_det, connect_rand, connect_revertible, ConnectivityAnswer, ConnectivityError,
    RandomizedConfig, Verdict,
};
pub use graph::{AdjacencyGraph, GraphError, GraphOracle, Vertex};
pub use metrics::RunMetrics;
pub use random_walk::{
    estimate_dag, estimate_general, estimate_stationary, StationaryEstimate, WalkError,
    WalkEstimate,
};
pub use tape::{CatalyticTape, TapeDigest, TapeError, TapeProfile};

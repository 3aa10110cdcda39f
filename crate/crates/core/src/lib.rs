//! Agreement-based correlation clustering.
//!
//! The input is a complete signed graph given by its "+" edges. Edges whose
//! endpoints have dissimilar neighborhoods are discarded, vertices that lost
//! too many edges are marked light, edges between two light vertices are
//! discarded, and the connected components of what remains are the clusters.
//! The same algorithm runs in memory, on a simulated MPC cluster and as a
//! multi-pass stream, and all three produce the same partition.

pub mod agreement;
pub mod cli;
pub mod components;
pub mod error;
pub mod eval;
pub mod graph;
pub mod io;
pub mod mpc;
pub mod pipeline;
pub mod sketch;
pub mod streaming;
pub mod validate;

pub use agreement::{sparsify, sparsify_exact, Params, SparsifiedGraph};
pub use components::Clustering;
pub use error::{Error, Result};
pub use graph::{SignedGraph, Vertex};
pub use pipeline::{run_in_memory, OracleMode};

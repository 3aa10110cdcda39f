use thiserror::Error;

use crate::graph::Vertex;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("edge ({u}, {v}) references a vertex outside [0, {n})")]
    VertexOutOfRange { u: u64, v: u64, n: usize },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("sketch of vertex {vertex} holds {size} samples, above the cap of {cap}")]
    SketchCapExceeded { vertex: Vertex, size: usize, cap: usize },

    #[error("vertices {u} and {v} share no sketch level (levels {ku} and {kv})")]
    NoCommonLevel { u: Vertex, v: Vertex, ku: u32, kv: u32 },

    #[error("round {round}: machine {machine} {kind} {load} words, cap is {cap}")]
    CapViolation {
        round: usize,
        machine: usize,
        kind: &'static str,
        load: usize,
        cap: usize,
    },

    #[error("invalid MPC configuration: {0}")]
    InvalidConfig(String),

    #[error("stream resident memory {resident} words exceeds the budget of {budget}")]
    MemoryBudget { resident: usize, budget: usize },

    #[error("edge stream failed to restart: {0}")]
    StreamRestart(String),

    #[error("brute force is limited to {limit} vertices, got {n}")]
    BruteForceLimit { n: usize, limit: usize },

    #[error("clustering covers {got} vertices, graph has {n}")]
    UncoveredVertex { got: usize, n: usize },

    #[error("infeasible generator parameters: {0}")]
    Infeasible(String),
}

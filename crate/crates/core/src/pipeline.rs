//! In-memory driver: sparsify, then exact connected components.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::agreement::{sparsify, ExactOracle, Params, SparsifiedGraph};
use crate::components::{union_find_components, Clustering};
use crate::error::{Error, Result};
use crate::graph::SignedGraph;
use crate::sketch::{SketchConfig, SketchOracle, ThresholdRule};

/// Which agreement test the drivers use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleMode {
    Exact,
    Sketch,
}

impl FromStr for OracleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(OracleMode::Exact),
            "sketch" => Ok(OracleMode::Sketch),
            other => Err(Error::InvalidParams(format!("unknown mode `{other}`"))),
        }
    }
}

impl fmt::Display for OracleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OracleMode::Exact => "exact",
            OracleMode::Sketch => "sketch",
        })
    }
}

/// Sketch settings every driver derives from the same inputs, so that all
/// of them reach identical per-edge decisions.
pub fn sketch_config(params: &Params, n: usize, mode: OracleMode, rule: ThresholdRule) -> SketchConfig {
    match mode {
        OracleMode::Exact => SketchConfig::full(*params, n),
        OracleMode::Sketch => SketchConfig::new(*params, n).with_rule(rule),
    }
}

/// Output of the in-memory driver.
#[derive(Clone, Debug)]
pub struct InMemoryRun<'g> {
    pub sparsified: SparsifiedGraph<'g>,
    pub clustering: Clustering,
}

pub fn run_in_memory<'g>(g: &'g SignedGraph, params: &Params, mode: OracleMode) -> Result<InMemoryRun<'g>> {
    run_in_memory_with_rule(g, params, mode, ThresholdRule::ExactWhenComplete)
}

pub fn run_in_memory_with_rule<'g>(
    g: &'g SignedGraph,
    params: &Params,
    mode: OracleMode,
    rule: ThresholdRule,
) -> Result<InMemoryRun<'g>> {
    params.validate()?;
    let sparsified = match mode {
        OracleMode::Exact => sparsify(g, params, &ExactOracle::new(g, params.beta))?,
        OracleMode::Sketch => {
            let oracle = SketchOracle::build(g, sketch_config(params, g.n(), mode, rule))?;
            sparsify(g, params, &oracle)?
        }
    };
    let clustering = union_find_components(&sparsified);
    Ok(InMemoryRun { sparsified, clustering })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{clustering_cost, gen_planted, planted_clustering};

    #[test]
    fn clique_and_path() {
        let k4 = SignedGraph::build(4, (0..4).flat_map(|u| (u + 1..4).map(move |v| (u, v)))).unwrap();
        let run = run_in_memory(&k4, &Params::new(0.05, 0.05), OracleMode::Exact).unwrap();
        assert_eq!(run.clustering.num_clusters(), 1);

        let p = SignedGraph::build(3, [(0, 1), (1, 2)]).unwrap();
        for mode in [OracleMode::Exact, OracleMode::Sketch] {
            let run = run_in_memory(&p, &Params::new(0.05, 0.05), mode).unwrap();
            assert_eq!(run.clustering.num_clusters(), 3);
        }
    }

    #[test]
    fn planted_cliques_recovered() {
        let g = gen_planted(2, 50, 1.0, 0.0, 8);
        let run = run_in_memory(&g, &Params::new(0.05, 0.05), OracleMode::Exact).unwrap();
        assert!(run.clustering.same_partition(&planted_clustering(2, 50)));
        assert_eq!(clustering_cost(&g, &run.clustering).unwrap(), 0);
    }

    #[test]
    fn modes_parse() {
        assert_eq!("exact".parse::<OracleMode>().unwrap(), OracleMode::Exact);
        assert_eq!(OracleMode::Sketch.to_string(), "sketch");
        assert!("fuzzy".parse::<OracleMode>().is_err());
    }
}

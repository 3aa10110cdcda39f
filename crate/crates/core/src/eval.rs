//! Objective, exact optimum for small inputs, the Pivot baseline, instance
//! generators and summary statistics.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::components::Clustering;
use crate::error::{Error, Result};
use crate::graph::{SignedGraph, Vertex};

/// Disagreements of `clustering` on `g`: "+" edges between clusters plus
/// "−" pairs inside clusters. Self-loops never count.
pub fn clustering_cost(g: &SignedGraph, clustering: &Clustering) -> Result<u64> {
    if clustering.n() != g.n() {
        return Err(Error::UncoveredVertex { got: clustering.n(), n: g.n() });
    }
    let mut inside = 0u64;
    let mut cut = 0u64;
    for &(u, v) in g.edges() {
        if clustering.cluster_of(u) == clustering.cluster_of(v) {
            inside += 1;
        } else {
            cut += 1;
        }
    }
    let pairs: u64 = clustering
        .cluster_sizes()
        .iter()
        .map(|&s| (s as u64) * (s as u64).saturating_sub(1) / 2)
        .sum();
    Ok(cut + pairs - inside)
}

pub const BRUTE_FORCE_LIMIT: usize = 12;

/// Exact optimum by enumerating set partitions in restricted-growth-string
/// order; the first minimizer found wins ties.
pub fn brute_force_opt(g: &SignedGraph) -> Result<(Clustering, u64)> {
    let n = g.n();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::BruteForceLimit { n, limit: BRUTE_FORCE_LIMIT });
    }
    if n == 0 {
        return Ok((Clustering::from_assignment(Vec::new()), 0));
    }
    let mut adj = vec![0u16; n];
    for &(u, v) in g.edges() {
        adj[u as usize] |= 1 << v;
        adj[v as usize] |= 1 << u;
    }
    let mut search = PartitionSearch {
        adj,
        blocks: vec![0; n],
        best: u64::MAX,
        best_blocks: Vec::new(),
    };
    search.descend(0, 0, 0);
    let best = search.best;
    Ok((Clustering::from_assignment(search.best_blocks), best))
}

struct PartitionSearch {
    adj: Vec<u16>,
    blocks: Vec<u32>,
    best: u64,
    best_blocks: Vec<u32>,
}

impl PartitionSearch {
    fn descend(&mut self, i: usize, used: u32, cost: u64) {
        if cost >= self.best {
            return;
        }
        let n = self.blocks.len();
        if i == n {
            self.best = cost;
            self.best_blocks = self.blocks.clone();
            return;
        }
        for b in 0..=used {
            let mut delta = 0;
            for j in 0..i {
                let plus = self.adj[i] >> j & 1 == 1;
                let same = self.blocks[j] == b;
                if plus != same {
                    delta += 1;
                }
            }
            self.blocks[i] = b;
            let next_used = if b == used { used + 1 } else { used };
            self.descend(i + 1, next_used, cost + delta);
        }
    }
}

/// Induced subgraph on `members`, relabelled `0..members.len()` in order.
pub fn induced_subgraph(g: &SignedGraph, members: &[Vertex]) -> SignedGraph {
    let index = |v: Vertex| members.iter().position(|&m| m == v);
    let mut edges = Vec::new();
    for (i, &u) in members.iter().enumerate() {
        for &w in g.neighbors(u) {
            if let Some(j) = index(w) {
                if i < j {
                    edges.push((i as Vertex, j as Vertex));
                }
            }
        }
    }
    SignedGraph::build(members.len(), edges).expect("indices are in range")
}

/// Cost of keeping `members` whole minus the cheapest way to split them,
/// with everything outside `members` held fixed. Non-positive means no split
/// of the cluster helps.
pub fn split_gain(g: &SignedGraph, members: &[Vertex]) -> Result<i64> {
    let sub = induced_subgraph(g, members);
    let whole = clustering_cost(&sub, &Clustering::from_assignment(vec![0; members.len()]))?;
    let (_, best) = brute_force_opt(&sub)?;
    Ok(whole as i64 - best as i64)
}

/// Pivot: visit vertices in a seeded random order; each unclustered vertex
/// opens a cluster with all of its unclustered "+" neighbors.
pub fn pivot_baseline(g: &SignedGraph, seed: u64) -> Clustering {
    let mut order: Vec<Vertex> = (0..g.n() as Vertex).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    pivot_with_order(g, &order)
}

/// Pivot with an explicit visiting order.
pub fn pivot_with_order(g: &SignedGraph, order: &[Vertex]) -> Clustering {
    const UNSET: u32 = u32::MAX;
    let mut assignment = vec![UNSET; g.n()];
    for &pivot in order {
        if assignment[pivot as usize] != UNSET {
            continue;
        }
        for &w in g.neighbors(pivot) {
            if assignment[w as usize] == UNSET {
                assignment[w as usize] = pivot;
            }
        }
    }
    Clustering::from_assignment(assignment)
}

/// Erdős–Rényi `G(n, p)`.
pub fn gen_gnp(n: usize, p: f64, seed: u64) -> SignedGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n as Vertex {
        for v in u + 1..n as Vertex {
            if rng.gen::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    SignedGraph::build(n, edges).expect("generated ids are in range")
}

/// `k` planted clusters of `size` vertices each; vertex `v` sits in cluster
/// `v / size`. Pairs inside a cluster are "+" with probability `p_in`, pairs
/// across with `p_out`.
pub fn gen_planted(k: usize, size: usize, p_in: f64, p_out: f64, seed: u64) -> SignedGraph {
    let n = k * size;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = if u / size == v / size { p_in } else { p_out };
            if rng.gen::<f64>() < p {
                edges.push((u as Vertex, v as Vertex));
            }
        }
    }
    SignedGraph::build(n, edges).expect("generated ids are in range")
}

pub fn planted_clustering(k: usize, size: usize) -> Clustering {
    Clustering::from_assignment((0..k * size).map(|v| (v / size) as u32).collect())
}

/// Shape of the two-clique instance on which the sparsification pays a
/// `1/β²`-order factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TightShape {
    pub clique: usize,
    pub cross: usize,
}

pub fn tight_shape(d: usize, beta: f64, x_mult: f64) -> Result<TightShape> {
    if !(beta > 0.0 && beta < 1.0) || x_mult < 1.0 {
        return Err(Error::Infeasible(format!("beta {beta}, x_mult {x_mult}")));
    }
    let x = x_mult * beta * d as f64;
    let clique = ((1.0 - beta) * d as f64).round() as usize;
    if x < 1.0 {
        return Err(Error::Infeasible(format!("x_mult·β·d = {x} is below 1")));
    }
    let cross = x.round() as usize;
    if clique < cross {
        return Err(Error::Infeasible(format!("clique size {clique} is below |X| = {cross}")));
    }
    Ok(TightShape { clique, cross })
}

/// Two disjoint cliques `A₁`, `A₂` of size `round((1−β)d)`, with subsets
/// `X₁ ⊆ A₁`, `X₂ ⊆ A₂` of size `round(x_mult·β·d)` completely joined.
/// `A₁` occupies ids `0..c`, `A₂` ids `c..2c`; each `X` is the prefix of its clique.
pub fn gen_tight_instance(d: usize, beta: f64, x_mult: f64) -> Result<SignedGraph> {
    let TightShape { clique, cross } = tight_shape(d, beta, x_mult)?;
    let c = clique as Vertex;
    let mut edges = Vec::new();
    for base in [0, c] {
        for u in 0..c {
            for v in u + 1..c {
                edges.push((base + u, base + v));
            }
        }
    }
    for x1 in 0..cross as Vertex {
        for x2 in 0..cross as Vertex {
            edges.push((x1, c + x2));
        }
    }
    SignedGraph::build(2 * clique, edges)
}

/// The `A₁ | A₂` partition of a tight instance.
pub fn tight_two_clique_partition(d: usize, beta: f64, x_mult: f64) -> Result<Clustering> {
    let shape = tight_shape(d, beta, x_mult)?;
    Ok(planted_clustering(2, shape.clique))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClusterStats {
    pub num_clusters: usize,
    /// cluster size → number of clusters of that size.
    pub size_histogram: BTreeMap<usize, usize>,
    /// "+" edges inside clusters over all "+" edges (1 when there are none).
    pub intra_cluster_edge_fraction: f64,
    pub objective: u64,
}

pub fn cluster_stats(g: &SignedGraph, clustering: &Clustering) -> Result<ClusterStats> {
    let objective = clustering_cost(g, clustering)?;
    let mut size_histogram = BTreeMap::new();
    for s in clustering.cluster_sizes() {
        *size_histogram.entry(s).or_insert(0) += 1;
    }
    let inside = g
        .edges()
        .iter()
        .filter(|&&(u, v)| clustering.cluster_of(u) == clustering.cluster_of(v))
        .count();
    let intra_cluster_edge_fraction =
        if g.m_plus() == 0 { 1.0 } else { inside as f64 / g.m_plus() as f64 };
    Ok(ClusterStats {
        num_clusters: clustering.num_clusters(),
        size_histogram,
        intra_cluster_edge_fraction,
        objective,
    })
}

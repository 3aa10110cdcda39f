//! Connected components of G̃.
//!
//! `label_propagation_4` is the round-bounded method: every vertex starts
//! with its own id and, four times, takes the maximum id over its closed
//! G̃-neighborhood. It recovers a component exactly when the component has
//! diameter at most 4. `union_find_components` is the exact reference.

use std::collections::{HashMap, VecDeque};

use serde::Serialize;

use crate::agreement::SparsifiedGraph;
use crate::graph::Vertex;

/// Number of max-label rounds used by the parallel and streaming drivers.
pub const PROPAGATION_ROUNDS: usize = 4;

/// A partition of the vertices, stored as one label per vertex.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Clustering {
    assignment: Vec<u32>,
    num_clusters: usize,
}

impl Clustering {
    pub fn from_assignment(assignment: Vec<u32>) -> Self {
        let mut seen: Vec<u32> = assignment.clone();
        seen.sort_unstable();
        seen.dedup();
        Clustering { num_clusters: seen.len(), assignment }
    }

    pub fn singletons(n: usize) -> Self {
        Clustering { assignment: (0..n as u32).collect(), num_clusters: n }
    }

    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    pub fn num_clusters(&self) -> usize {
        self.num_clusters
    }

    pub fn assignment(&self) -> &[u32] {
        &self.assignment
    }

    pub fn cluster_of(&self, v: Vertex) -> u32 {
        self.assignment[v as usize]
    }

    /// Relabels clusters `0..k` in order of first appearance.
    pub fn canonical(&self) -> Clustering {
        let mut relabel = HashMap::new();
        let assignment = self
            .assignment
            .iter()
            .map(|c| {
                let next = relabel.len() as u32;
                *relabel.entry(*c).or_insert(next)
            })
            .collect();
        Clustering { assignment, num_clusters: self.num_clusters }
    }

    /// Partition equality, ignoring label values.
    pub fn same_partition(&self, other: &Clustering) -> bool {
        self.n() == other.n() && self.canonical().assignment == other.canonical().assignment
    }

    /// Members of each cluster, clusters in first-appearance order.
    pub fn clusters(&self) -> Vec<Vec<Vertex>> {
        let canon = self.canonical();
        let mut out = vec![Vec::new(); canon.num_clusters];
        for (v, &c) in canon.assignment.iter().enumerate() {
            out[c as usize].push(v as Vertex);
        }
        out
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        self.clusters().iter().map(Vec::len).collect()
    }
}

/// One synchronous max-label round over G̃: reads `labels`, returns the next labels.
pub fn propagate_once(sg: &SparsifiedGraph<'_>, labels: &[u32]) -> Vec<u32> {
    let mut next = labels.to_vec();
    for (u, v) in sg.kept_edges() {
        let (u, v) = (u as usize, v as usize);
        next[u] = next[u].max(labels[v]);
        next[v] = next[v].max(labels[u]);
    }
    next
}

/// Max-label propagation for a fixed number of rounds.
pub fn label_propagation(sg: &SparsifiedGraph<'_>, rounds: usize) -> Clustering {
    let mut labels: Vec<u32> = (0..sg.n() as u32).collect();
    for _ in 0..rounds {
        labels = propagate_once(sg, &labels);
    }
    Clustering::from_assignment(labels)
}

pub fn label_propagation_4(sg: &SparsifiedGraph<'_>) -> Clustering {
    label_propagation(sg, PROPAGATION_ROUNDS)
}

struct DisjointSet {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet { parent: (0..n as u32).collect(), size: vec![1; n] }
    }

    fn find(&mut self, x: u32) -> u32 {
        let mut root = x;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        let mut cur = x;
        while self.parent[cur as usize] != root {
            let next = self.parent[cur as usize];
            self.parent[cur as usize] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        let (big, small) = if self.size[ra as usize] >= self.size[rb as usize] { (ra, rb) } else { (rb, ra) };
        self.parent[small as usize] = big;
        self.size[big as usize] += self.size[small as usize];
    }
}

/// Exact components of G̃; each component is labelled by its largest vertex id.
pub fn union_find_components(sg: &SparsifiedGraph<'_>) -> Clustering {
    let n = sg.n();
    let mut dsu = DisjointSet::new(n);
    for (u, v) in sg.kept_edges() {
        dsu.union(u, v);
    }
    let mut max_in_root = vec![0u32; n];
    for v in 0..n as u32 {
        let r = dsu.find(v) as usize;
        max_in_root[r] = max_in_root[r].max(v);
    }
    let assignment = (0..n as u32).map(|v| max_in_root[dsu.find(v) as usize]).collect();
    Clustering::from_assignment(assignment)
}

/// Hop distances from `source` along `neighbors`, `u32::MAX` when unreachable.
pub fn bfs_distances<F, I>(n: usize, source: Vertex, mut neighbors: F) -> Vec<u32>
where
    F: FnMut(Vertex) -> I,
    I: IntoIterator<Item = Vertex>,
{
    let mut dist = vec![u32::MAX; n];
    let mut queue = VecDeque::new();
    dist[source as usize] = 0;
    queue.push_back(source);
    while let Some(x) = queue.pop_front() {
        let dx = dist[x as usize];
        for y in neighbors(x) {
            if dist[y as usize] == u32::MAX {
                dist[y as usize] = dx + 1;
                queue.push_back(y);
            }
        }
    }
    dist
}

/// Components at or above this many vertices are checked from sampled sources.
pub const EXHAUSTIVE_DIAMETER_LIMIT: usize = 100_000;
pub const SAMPLED_SOURCES: usize = 64;

#[derive(Clone, Debug, Serialize)]
pub struct ComponentDiameter {
    /// Smallest vertex of the component.
    pub representative: Vertex,
    pub size: usize,
    pub max_eccentricity: u32,
    pub exhaustive: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DiameterReport {
    pub bound: u32,
    pub components: Vec<ComponentDiameter>,
}

impl DiameterReport {
    pub fn violations(&self) -> impl Iterator<Item = &ComponentDiameter> {
        self.components.iter().filter(|c| c.max_eccentricity > self.bound)
    }

    pub fn max_eccentricity(&self) -> u32 {
        self.components.iter().map(|c| c.max_eccentricity).max().unwrap_or(0)
    }
}

/// Max observed G̃-eccentricity per component of `clustering` (which must be
/// the exact components of `sg`).
pub fn validate_diameter(sg: &SparsifiedGraph<'_>, clustering: &Clustering, bound: u32) -> DiameterReport {
    let mut components = Vec::new();
    for members in clustering.clusters() {
        let size = members.len();
        if size == 1 {
            components.push(ComponentDiameter {
                representative: members[0],
                size,
                max_eccentricity: 0,
                exhaustive: true,
            });
            continue;
        }
        let exhaustive = size < EXHAUSTIVE_DIAMETER_LIMIT;
        let sources: Vec<Vertex> = if exhaustive {
            members.clone()
        } else {
            let stride = size / SAMPLED_SOURCES;
            (0..SAMPLED_SOURCES).map(|i| members[i * stride]).collect()
        };
        let mut ecc = 0;
        for s in sources {
            let dist = bfs_distances(sg.n(), s, |x| sg.neighbors(x));
            for &m in &members {
                ecc = ecc.max(dist[m as usize]);
            }
        }
        components.push(ComponentDiameter {
            representative: members[0],
            size,
            max_eccentricity: ecc,
            exhaustive,
        });
    }
    DiameterReport { bound, components }
}

//! Signed graph with explicit "+" edges and implicit "−" edges.
//!
//! Only E⁺ is stored. Every vertex carries a self-loop, so `v ∈ N(v)` and
//! `d(v) = |N(v)| ≥ 1`. Any pair not listed in E⁺ is a "−" pair.
//!
//! Layout is CSR: `offsets[v]..offsets[v + 1]` indexes into `neighbors`
//! (sorted, self included) and into `slot_edge`, which holds the id of the
//! undirected edge behind each slot (`SELF_LOOP` for the loop).

use crate::error::{Error, Result};

pub type Vertex = u32;
pub type EdgeId = u32;

/// Marker stored in `slot_edge` for the self-loop slot.
pub const SELF_LOOP: EdgeId = EdgeId::MAX;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignedGraph {
    offsets: Vec<usize>,
    neighbors: Vec<Vertex>,
    slot_edge: Vec<EdgeId>,
    /// Non-loop "+" edges as `(u, v)` with `u < v`, sorted.
    edges: Vec<(Vertex, Vertex)>,
}

impl SignedGraph {
    /// Builds the graph on vertices `0..n`.
    ///
    /// Duplicate pairs collapse, input self-pairs are dropped (every vertex
    /// gets its loop regardless), and a pair naming a vertex `>= n` is
    /// rejected with the offending pair.
    pub fn build<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vertex, Vertex)>,
    {
        if n > SELF_LOOP as usize {
            return Err(Error::InvalidParams(format!("{n} vertices exceed the id space")));
        }
        let mut list = Vec::new();
        for (u, v) in edges {
            if u as usize >= n || v as usize >= n {
                return Err(Error::VertexOutOfRange { u: u as u64, v: v as u64, n });
            }
            if u != v {
                list.push((u.min(v), u.max(v)));
            }
        }
        list.sort_unstable();
        list.dedup();
        Ok(Self::from_sorted_edges(n, list))
    }

    fn from_sorted_edges(n: usize, edges: Vec<(Vertex, Vertex)>) -> Self {
        let mut degree = vec![1usize; n];
        for &(u, v) in &edges {
            degree[u as usize] += 1;
            degree[v as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let total = offsets[n];
        let mut slots: Vec<(Vertex, EdgeId)> = vec![(0, SELF_LOOP); total];
        let mut fill: Vec<usize> = offsets[..n].to_vec();
        for v in 0..n {
            slots[fill[v]] = (v as Vertex, SELF_LOOP);
            fill[v] += 1;
        }
        for (e, &(u, v)) in edges.iter().enumerate() {
            slots[fill[u as usize]] = (v, e as EdgeId);
            fill[u as usize] += 1;
            slots[fill[v as usize]] = (u, e as EdgeId);
            fill[v as usize] += 1;
        }
        for v in 0..n {
            slots[offsets[v]..offsets[v + 1]].sort_unstable_by_key(|&(w, _)| w);
        }
        let (neighbors, slot_edge) = slots.into_iter().unzip();
        SignedGraph { offsets, neighbors, slot_edge, edges }
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of non-loop "+" edges.
    pub fn m_plus(&self) -> usize {
        self.edges.len()
    }

    pub fn degree(&self, v: Vertex) -> usize {
        let v = v as usize;
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n()).map(|v| self.degree(v as Vertex)).max().unwrap_or(0)
    }

    /// `N(v)`, sorted, including `v` itself.
    pub fn neighbors(&self, v: Vertex) -> &[Vertex] {
        let v = v as usize;
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    /// `(neighbor, edge id)` pairs of `v`; the self-loop slot carries `SELF_LOOP`.
    pub fn neighbor_slots(&self, v: Vertex) -> impl Iterator<Item = (Vertex, EdgeId)> + '_ {
        let range = self.offsets[v as usize]..self.offsets[v as usize + 1];
        self.neighbors[range.clone()]
            .iter()
            .copied()
            .zip(self.slot_edge[range].iter().copied())
    }

    pub fn edges(&self) -> &[(Vertex, Vertex)] {
        &self.edges
    }

    pub fn edge(&self, e: EdgeId) -> (Vertex, Vertex) {
        self.edges[e as usize]
    }

    pub fn edge_id(&self, u: Vertex, v: Vertex) -> Option<EdgeId> {
        if u == v {
            return None;
        }
        let (a, b) = (u.min(v), u.max(v));
        self.edges.binary_search(&(a, b)).ok().map(|i| i as EdgeId)
    }

    pub fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        u == v || self.neighbors(u).binary_search(&v).is_ok()
    }

    /// `|N(u) ∩ N(v)|` by sorted merge.
    pub fn intersection_size(&self, u: Vertex, v: Vertex) -> usize {
        intersection_count(self.neighbors(u), self.neighbors(v))
    }

    /// `|N(u) △ N(v)|`.
    pub fn sym_diff_size(&self, u: Vertex, v: Vertex) -> usize {
        self.degree(u) + self.degree(v) - 2 * self.intersection_size(u, v)
    }

    /// Whether `|N(u) △ N(v)| < limit`, stopping the merge as soon as the
    /// count reaches `limit`.
    pub fn sym_diff_below(&self, u: Vertex, v: Vertex, limit: usize) -> bool {
        sym_diff_below(self.neighbors(u), self.neighbors(v), limit)
    }

    /// `d(v, S) = |N(v) ∩ S|` for the set given as a membership mask.
    pub fn induced_degree(&self, v: Vertex, members: &[bool]) -> usize {
        self.neighbors(v).iter().filter(|&&w| members[w as usize]).count()
    }
}

pub(crate) fn intersection_count(a: &[Vertex], b: &[Vertex]) -> usize {
    let (mut i, mut j, mut common) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
        }
    }
    common
}

pub(crate) fn sym_diff_count(a: &[Vertex], b: &[Vertex]) -> usize {
    a.len() + b.len() - 2 * intersection_count(a, b)
}

pub(crate) fn sym_diff_below(a: &[Vertex], b: &[Vertex], limit: usize) -> bool {
    if a.len().abs_diff(b.len()) >= limit {
        return false;
    }
    let (mut i, mut j, mut diff) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                diff += 1;
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                diff += 1;
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
        if diff >= limit {
            return false;
        }
    }
    diff + (a.len() - i) + (b.len() - j) < limit
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> SignedGraph {
        SignedGraph::build(3, [(0, 1), (1, 2)]).unwrap()
    }

    fn k4() -> SignedGraph {
        let edges = (0..4).flat_map(|u| (u + 1..4).map(move |v| (u, v)));
        SignedGraph::build(4, edges).unwrap()
    }

    #[test]
    fn path_has_self_loops() {
        let g = path3();
        assert_eq!(g.neighbors(0), &[0, 1]);
        assert_eq!(g.neighbors(1), &[0, 1, 2]);
        assert_eq!(g.neighbors(2), &[1, 2]);
        assert_eq!((g.degree(0), g.degree(1), g.degree(2)), (2, 3, 2));
        assert_eq!(g.m_plus(), 2);
    }

    #[test]
    fn isolated_vertex() {
        let g = SignedGraph::build(1, []).unwrap();
        assert_eq!(g.neighbors(0), &[0]);
        assert_eq!(g.degree(0), 1);
    }

    #[test]
    fn clique() {
        let g = k4();
        for v in 0..4 {
            assert_eq!(g.neighbors(v), &[0, 1, 2, 3]);
        }
        for u in 0..4 {
            for v in 0..4 {
                assert_eq!(g.sym_diff_size(u, v), 0);
            }
        }
    }

    #[test]
    fn duplicates_and_loops_collapse() {
        let g = SignedGraph::build(3, [(0, 1), (1, 0), (1, 1), (0, 1), (2, 2)]).unwrap();
        assert_eq!(g.m_plus(), 1);
        assert_eq!(g.neighbors(2), &[2]);
    }

    #[test]
    fn out_of_range_names_pair() {
        let err = SignedGraph::build(3, [(0, 1), (2, 3)]).unwrap_err();
        match err {
            Error::VertexOutOfRange { u, v, n } => assert_eq!((u, v, n), (2, 3, 3)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn set_kernels_on_path() {
        let g = path3();
        assert_eq!(g.sym_diff_size(0, 0), 0);
        assert_eq!(g.sym_diff_size(0, 1), 1);
        assert_eq!(g.sym_diff_size(0, 2), 2);
        assert_eq!(g.intersection_size(0, 0), 2);
        assert_eq!(g.intersection_size(0, 2), 1);
        assert!(g.sym_diff_below(0, 1, 2));
        assert!(!g.sym_diff_below(0, 1, 1));
        assert!(!g.sym_diff_below(0, 2, 2));
    }

    #[test]
    fn disjoint_edges_share_nothing() {
        let g = SignedGraph::build(4, [(0, 1), (2, 3)]).unwrap();
        assert_eq!(g.intersection_size(0, 2), 0);
    }

    #[test]
    fn induced_degree_cases() {
        let g = path3();
        assert_eq!(g.induced_degree(1, &[true; 3]), 3);
        assert_eq!(g.induced_degree(1, &[false; 3]), 0);
        assert_eq!(g.induced_degree(1, &[true, false, true]), 2);
        assert_eq!(g.induced_degree(0, &[true, false, false]), 1);
    }

    #[test]
    fn edge_ids_match_slots() {
        let g = k4();
        for v in 0..4 {
            for (w, e) in g.neighbor_slots(v) {
                if w == v {
                    assert_eq!(e, SELF_LOOP);
                } else {
                    let (a, b) = g.edge(e);
                    assert_eq!((a, b), (v.min(w), v.max(w)));
                    assert_eq!(g.edge_id(v, w), Some(e));
                }
            }
        }
    }
}

//! Agreement predicate, heavy/light labelling and the sparsification that
//! produces G̃.
//!
//! Two vertices are in `i`-weak agreement when
//! `|N(u) △ N(v)| < i·β·max(d(u), d(v))` (strict). Sparsification:
//!
//! 1. decide agreement for every edge against the original graph, then drop
//!    the edges whose endpoints disagree;
//! 2. a vertex is light when it lost more than `λ·d(v)` edges in step 1;
//! 3. drop edges between two light vertices.
//!
//! The connected components of what is left are the clusters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{sym_diff_below, EdgeId, SignedGraph, Vertex, SELF_LOOP};

/// Algorithm parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub beta: f64,
    pub lambda: f64,
    /// Sampling constant of the sketch oracle.
    pub a: f64,
    pub seed: u64,
}

impl Default for Params {
    fn default() -> Self {
        Params { beta: 0.05, lambda: 0.05, a: 600.0, seed: 0 }
    }
}

impl Params {
    pub fn new(beta: f64, lambda: f64) -> Self {
        Params { beta, lambda, ..Params::default() }
    }

    pub fn with_a(mut self, a: f64) -> Self {
        self.a = a;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Range checks every run needs: β, λ in (0, 1) and `a > 0`.
    pub fn validate(&self) -> Result<()> {
        let frac = |x: f64| x > 0.0 && x < 1.0;
        if !frac(self.beta) {
            return Err(Error::InvalidParams(format!("beta must lie in (0, 1), got {}", self.beta)));
        }
        if !frac(self.lambda) {
            return Err(Error::InvalidParams(format!(
                "lambda must lie in (0, 1), got {}",
                self.lambda
            )));
        }
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::InvalidParams(format!("a must be positive, got {}", self.a)));
        }
        Ok(())
    }

    /// Preconditions under which the structural guarantees hold:
    /// `β < 1/20`, `5β + 2λ < 1` and `8β + λ ≤ 1/4`.
    pub fn analysis_valid(&self) -> bool {
        self.beta < 1.0 / 20.0
            && 5.0 * self.beta + 2.0 * self.lambda < 1.0
            && 8.0 * self.beta + self.lambda <= 0.25
    }

    /// The proven approximation factor `2 + 3/β + 1/λ + 1/(βλ)`.
    pub fn approximation_bound(&self) -> f64 {
        2.0 + 3.0 / self.beta + 1.0 / self.lambda + 1.0 / (self.beta * self.lambda)
    }
}

/// Exact `i`-weak agreement test.
pub fn in_weak_agreement_exact(g: &SignedGraph, u: Vertex, v: Vertex, i: u32, beta: f64) -> bool {
    let max = g.degree(u).max(g.degree(v));
    sym_diff_below(g.neighbors(u), g.neighbors(v), strict_limit(i as f64 * beta * max as f64))
}

/// Smallest integer `L` with `x < t ⇔ x < L` over the non-negative integers.
pub(crate) fn strict_limit(threshold: f64) -> usize {
    if threshold <= 0.0 {
        0
    } else {
        threshold.ceil() as usize
    }
}

/// Degree pre-filter: `min(du, dv) ≥ (1 − β)·max(du, dv)`.
///
/// Evaluated as `max − min ≤ β·max` so that, in floating point, every pair
/// the exact test accepts also passes here.
pub fn degree_compatible(du: usize, dv: usize, beta: f64) -> bool {
    let (lo, hi) = (du.min(dv), du.max(dv));
    ((hi - lo) as f64) <= beta * hi as f64
}

/// A symmetric, deterministic agreement decision over vertex pairs.
pub trait AgreementOracle {
    fn agrees(&self, u: Vertex, v: Vertex) -> Result<bool>;
}

/// Definition-based oracle over full neighborhoods.
#[derive(Clone, Copy, Debug)]
pub struct ExactOracle<'g> {
    graph: &'g SignedGraph,
    beta: f64,
}

impl<'g> ExactOracle<'g> {
    pub fn new(graph: &'g SignedGraph, beta: f64) -> Self {
        ExactOracle { graph, beta }
    }
}

impl AgreementOracle for ExactOracle<'_> {
    fn agrees(&self, u: Vertex, v: Vertex) -> Result<bool> {
        Ok(in_weak_agreement_exact(self.graph, u, v, 1, self.beta))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Lightness {
    Heavy,
    Light,
}

/// Light iff more than a λ-fraction of `d(v)` (loop included) was removed.
pub fn is_light(removed: usize, degree: usize, lambda: f64) -> bool {
    removed as f64 > lambda * degree as f64
}

/// G̃ together with the bookkeeping of how it was obtained.
#[derive(Clone, Debug)]
pub struct SparsifiedGraph<'g> {
    base: &'g SignedGraph,
    agree: Vec<bool>,
    kept: Vec<bool>,
    lightness: Vec<Lightness>,
    removed_step1: Vec<u32>,
}

impl<'g> SparsifiedGraph<'g> {
    /// Applies steps 2 and 3 to per-edge agreement decisions.
    pub fn from_decisions(base: &'g SignedGraph, lambda: f64, agree: Vec<bool>) -> Self {
        assert_eq!(agree.len(), base.m_plus(), "one decision per edge");
        let mut removed_step1 = vec![0u32; base.n()];
        for (e, &(u, v)) in base.edges().iter().enumerate() {
            if !agree[e] {
                removed_step1[u as usize] += 1;
                removed_step1[v as usize] += 1;
            }
        }
        let lightness: Vec<Lightness> = removed_step1
            .iter()
            .enumerate()
            .map(|(v, &r)| {
                if is_light(r as usize, base.degree(v as Vertex), lambda) {
                    Lightness::Light
                } else {
                    Lightness::Heavy
                }
            })
            .collect();
        let kept = base
            .edges()
            .iter()
            .zip(&agree)
            .map(|(&(u, v), &ok)| {
                ok && !(lightness[u as usize] == Lightness::Light
                    && lightness[v as usize] == Lightness::Light)
            })
            .collect();
        SparsifiedGraph { base, agree, kept, lightness, removed_step1 }
    }

    pub fn base(&self) -> &'g SignedGraph {
        self.base
    }

    pub fn n(&self) -> usize {
        self.base.n()
    }

    /// Whether edge `e` survived step 1.
    pub fn agreed(&self, e: EdgeId) -> bool {
        self.agree[e as usize]
    }

    /// Whether edge `e` is in G̃.
    pub fn kept(&self, e: EdgeId) -> bool {
        self.kept[e as usize]
    }

    pub fn kept_mask(&self) -> &[bool] {
        &self.kept
    }

    pub fn agree_mask(&self) -> &[bool] {
        &self.agree
    }

    pub fn lightness(&self, v: Vertex) -> Lightness {
        self.lightness[v as usize]
    }

    pub fn lightness_labels(&self) -> &[Lightness] {
        &self.lightness
    }

    pub fn removed_step1(&self, v: Vertex) -> usize {
        self.removed_step1[v as usize] as usize
    }

    pub fn num_kept_edges(&self) -> usize {
        self.kept.iter().filter(|&&k| k).count()
    }

    /// Neighbors of `v` in G̃, `v` itself included.
    pub fn neighbors(&self, v: Vertex) -> impl Iterator<Item = Vertex> + '_ {
        self.base
            .neighbor_slots(v)
            .filter(move |&(_, e)| e == SELF_LOOP || self.kept[e as usize])
            .map(|(w, _)| w)
    }

    /// Kept edges as `(u, v)` pairs.
    pub fn kept_edges(&self) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        self.base.edges().iter().zip(&self.kept).filter(|(_, &k)| k).map(|(&e, _)| e)
    }
}

/// Runs steps 1–3 with the given oracle, evaluating each edge once.
pub fn sparsify<'g, O: AgreementOracle>(
    g: &'g SignedGraph,
    params: &Params,
    oracle: &O,
) -> Result<SparsifiedGraph<'g>> {
    let agree = g
        .edges()
        .iter()
        .map(|&(u, v)| oracle.agrees(u, v))
        .collect::<Result<Vec<_>>>()?;
    Ok(SparsifiedGraph::from_decisions(g, params.lambda, agree))
}

/// `sparsify` with the exact oracle.
pub fn sparsify_exact<'g>(g: &'g SignedGraph, params: &Params) -> SparsifiedGraph<'g> {
    sparsify(g, params, &ExactOracle::new(g, params.beta)).expect("exact oracle is infallible")
}

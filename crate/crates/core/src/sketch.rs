//! Sampled agreement test.
//!
//! For every level exponent `k` there is one global sample `S(k)`: vertex `w`
//! belongs to it when a seeded hash of `(w, k)` falls below
//! `p_k = min(a·ln n / (β·j_k), 1)`, with `j_k = (1/(1−β))^k`. A vertex `v`
//! stores `S(v, k) = S(k) ∩ N(v)` for its own level `k_v` (the largest `k`
//! with `j_k ≤ d(v)`) and for `k_v + 1`. Because the coins are shared, two
//! sketches at the same level sample the same vertices, and
//! `X = |S(u, k) △ S(v, k)|` estimates `p_k·|N(u) △ N(v)|`.
//!
//! Levels are identified by the integer exponent, never by the real `j`.

use serde::{Deserialize, Serialize};
use xxhash_rust::xxh3::xxh3_64_with_seed;

use crate::agreement::{degree_compatible, strict_limit, AgreementOracle, Params};
use crate::error::{Error, Result};
use crate::graph::{sym_diff_count, SignedGraph, Vertex};

/// A degree level: `j = (1/(1−β))^k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Level {
    pub k: u32,
    pub j: f64,
}

fn ratio(beta: f64) -> f64 {
    1.0 / (1.0 - beta)
}

/// `j_k` for exponent `k`.
pub fn level_value(k: u32, beta: f64) -> f64 {
    ratio(beta).powi(k as i32)
}

/// The largest power of `1/(1−β)` not above `d`.
pub fn level_index(d: usize, beta: f64) -> Level {
    assert!(d >= 1, "degrees include the self-loop");
    let r = ratio(beta);
    let d = d as f64;
    let mut k = (d.ln() / r.ln()).floor().max(0.0) as u32;
    while level_value(k + 1, beta) <= d {
        k += 1;
    }
    while k > 0 && level_value(k, beta) > d {
        k -= 1;
    }
    Level { k, j: level_value(k, beta) }
}

/// Shared coin for `(w, k)`: deterministic in `(seed, w, k)` only.
pub fn sample_member(seed: u64, w: Vertex, k: u32, p: f64) -> bool {
    let mut bytes = [0u8; 8];
    bytes[..4].copy_from_slice(&w.to_le_bytes());
    bytes[4..].copy_from_slice(&k.to_le_bytes());
    let h = xxh3_64_with_seed(&bytes, seed);
    let unit = (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    unit < p
}

/// Whether sketches sample by coin or keep the whole neighborhood.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sampling {
    Sampled,
    /// Every level uses `p = 1`; decisions reduce to the exact test.
    Full,
}

/// Decision rule once the common level has `p = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThresholdRule {
    /// Compare the exact symmetric difference against `β·max(d(u), d(v))`.
    ExactWhenComplete,
    /// Always use `X ≤ 0.9·τ`, even when `X` is exact.
    Literal,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SketchConfig {
    pub params: Params,
    pub n: usize,
    pub sampling: Sampling,
    pub rule: ThresholdRule,
    /// Hard cap on samples per level, as a multiple of `a·ln n / β`.
    pub cap_factor: f64,
}

impl SketchConfig {
    pub fn new(params: Params, n: usize) -> Self {
        SketchConfig {
            params,
            n,
            sampling: Sampling::Sampled,
            rule: ThresholdRule::ExactWhenComplete,
            cap_factor: 3.0,
        }
    }

    pub fn full(params: Params, n: usize) -> Self {
        SketchConfig { sampling: Sampling::Full, ..Self::new(params, n) }
    }

    pub fn with_rule(mut self, rule: ThresholdRule) -> Self {
        self.rule = rule;
        self
    }

    /// `a·ln n`, with `n` floored at 2 so single-vertex inputs stay meaningful.
    pub fn a_log_n(&self) -> f64 {
        self.params.a * (self.n.max(2) as f64).ln()
    }

    /// Sampling probability at level exponent `k`.
    pub fn probability(&self, k: u32) -> f64 {
        match self.sampling {
            Sampling::Full => 1.0,
            Sampling::Sampled => {
                let p = self.a_log_n() / (self.params.beta * level_value(k, self.params.beta));
                p.min(1.0)
            }
        }
    }

    pub fn cap(&self) -> Option<usize> {
        match self.sampling {
            Sampling::Full => None,
            Sampling::Sampled => {
                Some((self.cap_factor * self.a_log_n() / self.params.beta).ceil() as usize)
            }
        }
    }
}

/// A vertex's samples at its own level and the next one.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSketch {
    pub owner: Vertex,
    pub degree: usize,
    /// Exponent `k_v`.
    pub level: u32,
    /// `S(v, k_v)`, sorted.
    pub samples_at_level: Vec<Vertex>,
    /// `S(v, k_v + 1)`, sorted.
    pub samples_at_next: Vec<Vertex>,
}

impl SampleSketch {
    /// Builds the sketch from `N(v)` (sorted, loop included).
    pub fn build(owner: Vertex, neighbors: &[Vertex], cfg: &SketchConfig) -> Result<Self> {
        let level = level_index(neighbors.len(), cfg.params.beta).k;
        let filter = |k: u32| -> Vec<Vertex> {
            let p = cfg.probability(k);
            neighbors.iter().copied().filter(|&w| sample_member(cfg.params.seed, w, k, p)).collect()
        };
        let sketch = SampleSketch {
            owner,
            degree: neighbors.len(),
            level,
            samples_at_level: filter(level),
            samples_at_next: filter(level + 1),
        };
        sketch.check_cap(cfg)?;
        Ok(sketch)
    }

    pub fn check_cap(&self, cfg: &SketchConfig) -> Result<()> {
        if let Some(cap) = cfg.cap() {
            let size = self.samples_at_level.len().max(self.samples_at_next.len());
            if size > cap {
                return Err(Error::SketchCapExceeded { vertex: self.owner, size, cap });
            }
        }
        Ok(())
    }

    /// Samples at exponent `k`, if this sketch holds that level.
    pub fn samples(&self, k: u32) -> Option<&[Vertex]> {
        if k == self.level {
            Some(&self.samples_at_level)
        } else if k == self.level + 1 {
            Some(&self.samples_at_next)
        } else {
            None
        }
    }

    /// Size in machine words: owner, degree, level, two lengths, samples.
    pub fn words(&self) -> usize {
        5 + self.samples_at_level.len() + self.samples_at_next.len()
    }
}

pub fn build_sketches(g: &SignedGraph, cfg: &SketchConfig) -> Result<Vec<SampleSketch>> {
    (0..g.n() as Vertex).map(|v| SampleSketch::build(v, g.neighbors(v), cfg)).collect()
}

/// The sampled agreement decision for the pair owning `su` and `sv`.
pub fn agreement_sampled(su: &SampleSketch, sv: &SampleSketch, cfg: &SketchConfig) -> Result<bool> {
    let beta = cfg.params.beta;
    if !degree_compatible(su.degree, sv.degree, beta) {
        return Ok(false);
    }
    // The higher-degree endpoint's level is held by both sketches.
    let (hi, lo) = if su.degree >= sv.degree { (su, sv) } else { (sv, su) };
    let k = hi.level;
    let (Some(a), Some(b)) = (hi.samples(k), lo.samples(k)) else {
        return Err(Error::NoCommonLevel { u: su.owner, v: sv.owner, ku: su.level, kv: sv.level });
    };
    let x = sym_diff_count(a, b);
    let max_degree = hi.degree as f64;
    if cfg.probability(k) >= 1.0 && cfg.rule == ThresholdRule::ExactWhenComplete {
        return Ok(x < strict_limit(beta * max_degree));
    }
    let tau = cfg.a_log_n() / level_value(k, beta) * max_degree;
    Ok(x as f64 <= 0.9 * tau)
}

/// Agreement oracle backed by frozen per-vertex sketches.
#[derive(Clone, Debug)]
pub struct SketchOracle {
    sketches: Vec<SampleSketch>,
    cfg: SketchConfig,
}

impl SketchOracle {
    pub fn build(g: &SignedGraph, cfg: SketchConfig) -> Result<Self> {
        Ok(SketchOracle { sketches: build_sketches(g, &cfg)?, cfg })
    }

    pub fn sketches(&self) -> &[SampleSketch] {
        &self.sketches
    }

    pub fn config(&self) -> &SketchConfig {
        &self.cfg
    }
}

impl AgreementOracle for SketchOracle {
    fn agrees(&self, u: Vertex, v: Vertex) -> Result<bool> {
        agreement_sampled(&self.sketches[u as usize], &self.sketches[v as usize], &self.cfg)
    }
}

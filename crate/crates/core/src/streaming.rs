//! Multi-pass semi-streaming driver.
//!
//! Passes over the edge stream:
//! * P0 counts degrees;
//! * P1 collects each vertex's samples at its level and the next one (the
//!   coins are a pure function of the seed, so no neighbor list is needed);
//! * P2 decides every edge from the resident sketches, counts removals and
//!   marks light vertices once the pass ends;
//! * P3–P6 each apply one synchronous max-label round, deciding on arrival
//!   whether an edge belongs to G̃.
//!
//! Labels are double-buffered so the output does not depend on edge order.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::agreement::{is_light, Params};
use crate::components::{Clustering, PROPAGATION_ROUNDS};
use crate::error::{Error, Result};
use crate::graph::{SignedGraph, Vertex};
use crate::io::{parse_edge_line, IdMap};
use crate::pipeline::{sketch_config, OracleMode};
use crate::sketch::{agreement_sampled, level_index, sample_member, SampleSketch, SketchConfig, ThresholdRule};

/// Passes made by [`run_streaming_pipeline`] on every input.
pub const STREAM_PASSES: usize = 3 + PROPAGATION_ROUNDS;

/// Budget constant `C` in `C·n·(ln n)²/β`, as a function of `a`.
///
/// A sketch level holds at most `3·a·ln n/β` samples, so two levels plus a
/// handful of per-vertex counters fit in `(8 + 6a)·(ln n)²/β` words per
/// vertex whenever `ln n ≥ 1`.
pub fn budget_constant(a: f64) -> f64 {
    8.0 + 6.0 * a
}

pub fn memory_budget(n: usize, params: &Params) -> usize {
    let ln = (n.max(3) as f64).ln();
    (budget_constant(params.a) * n.max(1) as f64 * ln * ln / params.beta).ceil() as usize
}

/// A restartable source of undirected edges over dense ids `0..n`.
///
/// Every pass must yield the same multiset of edges; order may change.
/// Self-pairs and repeated pairs must not be yielded.
pub trait EdgeStreamProvider {
    /// Vertex count. May only be known after the first pass.
    fn num_vertices(&self) -> usize;

    /// Feeds every edge of pass `pass` (0-based) to `sink`.
    fn stream(&mut self, pass: usize, sink: &mut dyn FnMut(Vertex, Vertex) -> Result<()>) -> Result<()>;
}

/// In-memory provider, optionally reshuffled before every pass.
#[derive(Clone, Debug)]
pub struct VecStream {
    n: usize,
    edges: Vec<(Vertex, Vertex)>,
    shuffle_seed: Option<u64>,
}

impl VecStream {
    pub fn from_graph(g: &SignedGraph) -> Self {
        VecStream { n: g.n(), edges: g.edges().to_vec(), shuffle_seed: None }
    }

    /// Each pass sees a fresh permutation and random endpoint orientation.
    pub fn shuffled(mut self, seed: u64) -> Self {
        self.shuffle_seed = Some(seed);
        self
    }
}

impl EdgeStreamProvider for VecStream {
    fn num_vertices(&self) -> usize {
        self.n
    }

    fn stream(&mut self, pass: usize, sink: &mut dyn FnMut(Vertex, Vertex) -> Result<()>) -> Result<()> {
        if let Some(seed) = self.shuffle_seed {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(pass as u64));
            self.edges.shuffle(&mut rng);
            for e in &mut self.edges {
                if rand::Rng::gen_bool(&mut rng, 0.5) {
                    *e = (e.1, e.0);
                }
            }
        }
        for &(u, v) in &self.edges {
            sink(u, v)?;
        }
        Ok(())
    }
}

/// Streams an edge-list file from disk on every pass.
///
/// Ids are interned in first-appearance order during the first pass, like
/// [`crate::io::read_edge_list`]. Self-pairs are skipped, and so are repeated
/// pairs unless `dedup` is switched off.
#[derive(Debug)]
pub struct FileEdgeStream {
    path: PathBuf,
    ids: IdMap,
    dedup: bool,
    edges_per_pass: Option<usize>,
}

impl FileEdgeStream {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        File::open(&path)?;
        Ok(FileEdgeStream { path, ids: IdMap::default(), dedup: true, edges_per_pass: None })
    }

    pub fn with_dedup(mut self, dedup: bool) -> Self {
        self.dedup = dedup;
        self
    }

    pub fn ids(&self) -> &IdMap {
        &self.ids
    }

    pub fn into_ids(self) -> IdMap {
        self.ids
    }
}

impl EdgeStreamProvider for FileEdgeStream {
    fn num_vertices(&self) -> usize {
        self.ids.len()
    }

    fn stream(&mut self, pass: usize, sink: &mut dyn FnMut(Vertex, Vertex) -> Result<()>) -> Result<()> {
        let file = File::open(&self.path)
            .map_err(|e| Error::StreamRestart(format!("{}: {e}", self.path.display())))?;
        let first = self.edges_per_pass.is_none();
        let mut seen = HashSet::new();
        let mut count = 0usize;
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let Some((a, b)) = parse_edge_line(&line?, i + 1)? else { continue };
            let (u, v) = if first {
                (self.ids.intern(a), self.ids.intern(b))
            } else {
                match (self.ids.get(a), self.ids.get(b)) {
                    (Some(u), Some(v)) => (u, v),
                    _ => {
                        return Err(Error::StreamRestart(format!(
                            "pass {pass}: line {} names an id unseen in the first pass",
                            i + 1
                        )))
                    }
                }
            };
            if u == v || (self.dedup && !seen.insert((u.min(v), u.max(v)))) {
                continue;
            }
            count += 1;
            sink(u, v)?;
        }
        match self.edges_per_pass {
            None => self.edges_per_pass = Some(count),
            Some(expected) if expected != count => {
                return Err(Error::StreamRestart(format!(
                    "pass {pass} yielded {count} edges, the first pass {expected}"
                )))
            }
            Some(_) => {}
        }
        Ok(())
    }
}

/// Resident per-vertex state of the streaming driver.
#[derive(Clone, Debug, Default)]
pub struct StreamState {
    pub degrees: Vec<u32>,
    pub sketches: Vec<SampleSketch>,
    pub light: Vec<bool>,
    pub labels: Vec<u32>,
    pub pass_counter: usize,
}

impl StreamState {
    /// Words held: degrees, removal counters, light bits, two label buffers,
    /// sketches.
    pub fn resident_words(&self) -> usize {
        let n = self.degrees.len();
        5 * n + self.sketches.iter().map(SampleSketch::words).sum::<usize>()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StreamReport {
    pub passes: usize,
    pub peak_resident_words: usize,
    pub budget_words: usize,
}

pub fn run_streaming_pipeline<P: EdgeStreamProvider + ?Sized>(
    provider: &mut P,
    params: &Params,
    mode: OracleMode,
) -> Result<(Clustering, StreamReport)> {
    run_streaming_pipeline_with_rule(provider, params, mode, ThresholdRule::ExactWhenComplete)
}

pub fn run_streaming_pipeline_with_rule<P: EdgeStreamProvider + ?Sized>(
    provider: &mut P,
    params: &Params,
    mode: OracleMode,
    rule: ThresholdRule,
) -> Result<(Clustering, StreamReport)> {
    params.validate()?;
    let mut st = StreamState::default();

    // P0: degrees.
    let mut counts: Vec<u32> = Vec::new();
    provider.stream(0, &mut |u, v| {
        let hi = u.max(v) as usize;
        if counts.len() <= hi {
            counts.resize(hi + 1, 0);
        }
        counts[u as usize] += 1;
        counts[v as usize] += 1;
        Ok(())
    })?;
    let n = provider.num_vertices();
    if counts.len() > n {
        return Err(Error::StreamRestart(format!("edge endpoint {} outside [0, {n})", counts.len() - 1)));
    }
    counts.resize(n, 0);
    st.degrees = counts.into_iter().map(|c| c + 1).collect();
    st.pass_counter = 1;

    let cfg = sketch_config(params, n, mode, rule);
    let budget = memory_budget(n, params);
    let mut peak = 0;
    let mut audit = |st: &StreamState| -> Result<()> {
        let resident = st.resident_words();
        peak = peak.max(resident);
        if resident > budget {
            return Err(Error::MemoryBudget { resident, budget });
        }
        Ok(())
    };

    // P1: sketches. The owner is its own neighbor through the loop.
    let seed = params.seed;
    st.sketches = (0..n as Vertex)
        .map(|v| {
            let degree = st.degrees[v as usize] as usize;
            let level = level_index(degree, params.beta).k;
            let mut s = SampleSketch {
                owner: v,
                degree,
                level,
                samples_at_level: Vec::new(),
                samples_at_next: Vec::new(),
            };
            offer(&mut s, v, seed, &cfg);
            s
        })
        .collect();
    provider.stream(1, &mut |u, v| {
        offer(&mut st.sketches[u as usize], v, seed, &cfg);
        offer(&mut st.sketches[v as usize], u, seed, &cfg);
        Ok(())
    })?;
    for s in &mut st.sketches {
        s.samples_at_level.sort_unstable();
        s.samples_at_next.sort_unstable();
        s.check_cap(&cfg)?;
    }
    st.pass_counter = 2;
    audit(&st)?;

    // P2: agreement decisions and removal counts.
    let mut removed = vec![0u32; n];
    {
        let sketches = &st.sketches;
        provider.stream(2, &mut |u, v| {
            if !agreement_sampled(&sketches[u as usize], &sketches[v as usize], &cfg)? {
                removed[u as usize] += 1;
                removed[v as usize] += 1;
            }
            Ok(())
        })?;
    }
    st.light = (0..n)
        .map(|v| is_light(removed[v] as usize, st.degrees[v] as usize, params.lambda))
        .collect();
    st.pass_counter = 3;

    // P3–P6: one max-label round per pass.
    st.labels = (0..n as u32).collect();
    for round in 0..PROPAGATION_ROUNDS {
        let current = &st.labels;
        let mut next = current.clone();
        let (sketches, light) = (&st.sketches, &st.light);
        provider.stream(3 + round, &mut |u, v| {
            let (ui, vi) = (u as usize, v as usize);
            if light[ui] && light[vi] {
                return Ok(());
            }
            if agreement_sampled(&sketches[ui], &sketches[vi], &cfg)? {
                next[ui] = next[ui].max(current[vi]);
                next[vi] = next[vi].max(current[ui]);
            }
            Ok(())
        })?;
        st.labels = next;
        st.pass_counter += 1;
        audit(&st)?;
    }

    let report = StreamReport { passes: st.pass_counter, peak_resident_words: peak, budget_words: budget };
    Ok((Clustering::from_assignment(std::mem::take(&mut st.labels)), report))
}

fn offer(s: &mut SampleSketch, w: Vertex, seed: u64, cfg: &SketchConfig) {
    if sample_member(seed, w, s.level, cfg.probability(s.level)) {
        s.samples_at_level.push(w);
    }
    if sample_member(seed, w, s.level + 1, cfg.probability(s.level + 1)) {
        s.samples_at_next.push(w);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::gen_gnp;
    use crate::pipeline::run_in_memory;
    use std::io::Write;

    #[test]
    fn clique_in_any_order() {
        let g = gen_gnp(4, 1.0, 0);
        for seed in 0..5 {
            let mut s = VecStream::from_graph(&g).shuffled(seed);
            let (c, report) = run_streaming_pipeline(&mut s, &Params::new(0.05, 0.05), OracleMode::Sketch).unwrap();
            assert_eq!(c.num_clusters(), 1);
            assert_eq!(report.passes, STREAM_PASSES);
        }
    }

    #[test]
    fn path_is_three_singletons() {
        let g = SignedGraph::build(3, [(0, 1), (1, 2)]).unwrap();
        let mut s = VecStream::from_graph(&g);
        let (c, report) = run_streaming_pipeline(&mut s, &Params::new(0.05, 0.05), OracleMode::Exact).unwrap();
        assert_eq!(c.num_clusters(), 3);
        assert_eq!(report.passes, 7);
    }

    #[test]
    fn permutation_invariant_and_matches_in_memory() {
        let g = gen_gnp(300, 0.2, 11);
        let params = Params::new(0.2, 0.2).with_seed(11);
        let expected = run_in_memory(&g, &params, OracleMode::Sketch).unwrap().clustering;
        for seed in 0..20 {
            let mut s = VecStream::from_graph(&g).shuffled(seed);
            let (c, report) = run_streaming_pipeline(&mut s, &params, OracleMode::Sketch).unwrap();
            assert!(c.same_partition(&expected), "permutation seed {seed}");
            assert!(report.peak_resident_words <= report.budget_words);
        }
    }

    #[test]
    fn file_stream_matches_parsed_graph() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "# two triangles sharing nothing, one repeated edge").unwrap();
        for (a, b) in [(10, 20), (20, 30), (30, 10), (20, 10), (7, 8), (8, 9), (9, 7), (9, 9)] {
            writeln!(f, "{a} {b}").unwrap();
        }
        let mut s = FileEdgeStream::open(f.path()).unwrap();
        let (c, report) = run_streaming_pipeline(&mut s, &Params::new(0.05, 0.05), OracleMode::Exact).unwrap();
        assert_eq!(report.passes, STREAM_PASSES);
        assert_eq!(s.num_vertices(), 6);
        assert_eq!(c.cluster_sizes(), vec![3, 3]);
        assert_eq!(s.ids().original(0), 10);
    }

    #[test]
    fn file_stream_reports_missing_file() {
        assert!(FileEdgeStream::open("/nonexistent/edges.txt").is_err());
    }

    struct Shrinking(usize);

    impl EdgeStreamProvider for Shrinking {
        fn num_vertices(&self) -> usize {
            4
        }

        fn stream(&mut self, pass: usize, sink: &mut dyn FnMut(Vertex, Vertex) -> Result<()>) -> Result<()> {
            if pass >= self.0 {
                return Err(Error::StreamRestart(format!("pass {pass} unavailable")));
            }
            sink(0, 1)
        }
    }

    #[test]
    fn restart_failure_propagates() {
        let err = run_streaming_pipeline(&mut Shrinking(3), &Params::default(), OracleMode::Exact).unwrap_err();
        assert!(matches!(err, Error::StreamRestart(_)));
    }

    #[test]
    fn budget_grows_with_n() {
        let p = Params::default();
        assert!(memory_budget(1000, &p) > memory_budget(100, &p));
        assert!(memory_budget(1, &p) > 0);
    }
}

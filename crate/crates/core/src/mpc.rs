//! Deterministic simulator of the MPC model and the pipeline hosted on it.
//!
//! Machines are logical. Each round every machine sends keyed messages; a
//! message's key fixes its destination machine through a stable hash, and
//! everything addressed to the same key is grouped on arrival. Loads are
//! counted in words (one vertex id or one counter per word) and checked
//! against the per-machine cap `S = ceil(n^δ)` for words sent, received and
//! resident (received plus state kept on the machine).
//!
//! A message may name several destination keys. This stands in for the
//! sorting-based broadcast that copies one record to many keys in O(1)
//! rounds: the sender pays the payload once plus one word per extra
//! destination, and every destination receives the full payload.
//!
//! Layout of the pipeline:
//! * `Edge(e)` holds an edge and decides it;
//! * `Slice(v, t)` holds the part of `v`'s adjacency whose edges hash to `t`
//!   (fan-out fixed per run from `n` and `S`), so no vertex needs its whole
//!   edge list on one machine;
//! * `Vertex(v)` holds per-vertex aggregates and sees only per-slice partials.
//!
//! The schedule is fixed, so the round count does not depend on the input:
//! see [`MPC_ROUNDS`].

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde::Serialize;
use xxhash_rust::xxh3::xxh3_64_with_seed;

use crate::agreement::{is_light, Params};
use crate::components::{Clustering, PROPAGATION_ROUNDS};
use crate::error::{Error, Result};
use crate::graph::{EdgeId, SignedGraph, Vertex};
use crate::pipeline::{sketch_config, OracleMode};
use crate::sketch::{agreement_sampled, level_index, sample_member, SampleSketch, SketchConfig, ThresholdRule};

/// Rounds used by [`run_mpc_pipeline`] on every input.
///
/// 12 rounds through lightness and the first propagation step, 4 for each of
/// the remaining 3 propagation steps, 1 for output collection.
pub const MPC_ROUNDS: usize = 12 + 4 * (PROPAGATION_ROUNDS - 1) + 1;

const ROUTE_SEED: u64 = 0x6d70_635f_726f_7574;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Enforcement {
    /// Any load above the cap aborts the run.
    Strict,
    /// Loads above the cap are recorded and the run continues.
    Audit,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MpcConfig {
    pub num_machines: usize,
    pub delta: f64,
    /// Words per machine, `ceil(n^δ)`.
    pub memory_cap: usize,
    pub enforcement: Enforcement,
}

impl MpcConfig {
    /// Rejects configurations whose machines cannot even hold the input.
    pub fn new(
        n: usize,
        input_words: usize,
        num_machines: usize,
        delta: f64,
        enforcement: Enforcement,
    ) -> Result<Self> {
        if num_machines == 0 {
            return Err(Error::InvalidConfig("at least one machine is required".into()));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidConfig(format!("delta must lie in (0, 1), got {delta}")));
        }
        let memory_cap = (n.max(1) as f64).powf(delta).ceil() as usize;
        if num_machines.saturating_mul(memory_cap) < input_words {
            return Err(Error::InvalidConfig(format!(
                "{num_machines} machines of {memory_cap} words cannot hold {input_words} input words"
            )));
        }
        Ok(MpcConfig { num_machines, delta, memory_cap, enforcement })
    }

    /// Configuration for `g`. The input is one packed record per "+" edge.
    pub fn for_graph(g: &SignedGraph, num_machines: usize, delta: f64, enforcement: Enforcement) -> Result<Self> {
        Self::new(g.n(), g.m_plus(), num_machines, delta, enforcement)
    }

    /// Number of adjacency slices per vertex: enough that a slice of a vertex
    /// of degree `n` stays around a quarter of the cap.
    pub fn slice_fanout(&self, n: usize) -> u32 {
        (4 * n).div_ceil(self.memory_cap).max(1) as u32
    }
}

/// Addresses of keyed groups.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Key {
    /// Pinned to one machine.
    Machine(u32),
    Vertex(Vertex),
    Slice(Vertex, u32),
    Edge(EdgeId),
    Output(u32),
}

impl Key {
    pub fn machine(&self, num_machines: usize) -> usize {
        let (tag, a, b) = match *self {
            Key::Machine(m) => return m as usize % num_machines,
            Key::Vertex(v) => (1u8, v, 0),
            Key::Slice(v, t) => (2, v, t),
            Key::Edge(e) => (3, e, 0),
            Key::Output(o) => (4, o, 0),
        };
        let mut bytes = [0u8; 9];
        bytes[0] = tag;
        bytes[1..5].copy_from_slice(&a.to_le_bytes());
        bytes[5..].copy_from_slice(&b.to_le_bytes());
        (xxh3_64_with_seed(&bytes, ROUTE_SEED) % num_machines as u64) as usize
    }
}

/// Size of a payload in words.
pub trait Words {
    fn words(&self) -> usize;
}

#[derive(Clone, Debug)]
pub struct Message<P> {
    pub dests: Vec<Key>,
    pub payload: P,
}

impl<P> Message<P> {
    pub fn to(key: Key, payload: P) -> Self {
        Message { dests: vec![key], payload }
    }

    pub fn multicast(dests: Vec<Key>, payload: P) -> Self {
        Message { dests, payload }
    }
}

/// Messages grouped by their destination key, per machine.
pub type Inbox<P> = BTreeMap<Key, Vec<P>>;

/// Outgoing messages per source machine.
pub struct Outboxes<P> {
    boxes: Vec<Vec<Message<P>>>,
}

impl<P> Outboxes<P> {
    pub fn new(num_machines: usize) -> Self {
        Outboxes { boxes: (0..num_machines).map(|_| Vec::new()).collect() }
    }

    /// Queues `msg` on the machine that hosts `from`.
    pub fn push(&mut self, from: Key, msg: Message<P>) {
        let m = from.machine(self.boxes.len());
        self.boxes[m].push(msg);
    }

    pub fn send(&mut self, from: Key, to: Key, payload: P) {
        self.push(from, Message::to(to, payload));
    }

    pub fn into_inner(self) -> Vec<Vec<Message<P>>> {
        self.boxes
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RoundLoad {
    pub stage: String,
    pub sent_max: usize,
    pub recv_max: usize,
    pub resident_max: usize,
    /// Words delivered to all machines this round.
    pub total_words: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CapViolation {
    pub round: usize,
    pub machine: usize,
    pub kind: &'static str,
    pub load: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct MpcTrace {
    pub rounds: usize,
    pub per_round: Vec<RoundLoad>,
    pub total_words: usize,
    pub memory_cap: usize,
    pub num_machines: usize,
    pub violations: Vec<CapViolation>,
}

impl MpcTrace {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn peak_load(&self) -> usize {
        self.per_round
            .iter()
            .map(|r| r.sent_max.max(r.recv_max).max(r.resident_max))
            .max()
            .unwrap_or(0)
    }
}

/// Round bookkeeping: load accounting, cap checks and resident state.
pub struct Simulator {
    config: MpcConfig,
    held: HashMap<Key, usize>,
    trace: MpcTrace,
}

impl Simulator {
    pub fn new(config: MpcConfig) -> Self {
        let trace = MpcTrace {
            memory_cap: config.memory_cap,
            num_machines: config.num_machines,
            ..MpcTrace::default()
        };
        Simulator { config, held: HashMap::new(), trace }
    }

    pub fn config(&self) -> &MpcConfig {
        &self.config
    }

    pub fn trace(&self) -> &MpcTrace {
        &self.trace
    }

    pub fn into_trace(self) -> MpcTrace {
        self.trace
    }

    pub fn machine_of(&self, key: Key) -> usize {
        key.machine(self.config.num_machines)
    }

    /// Sets the words of state a group keeps between rounds.
    pub fn hold(&mut self, key: Key, words: usize) {
        if words == 0 {
            self.held.remove(&key);
        } else {
            self.held.insert(key, words);
        }
    }

    /// Checks the initial placement: `words[m]` words start on machine `m`.
    pub fn check_input(&mut self, words: &[usize]) -> Result<()> {
        for (m, &w) in words.iter().enumerate() {
            self.check(0, m, "holds input of", w)?;
        }
        Ok(())
    }

    fn check(&mut self, round: usize, machine: usize, kind: &'static str, load: usize) -> Result<()> {
        if load <= self.config.memory_cap {
            return Ok(());
        }
        match self.config.enforcement {
            Enforcement::Strict => Err(Error::CapViolation {
                round,
                machine,
                kind,
                load,
                cap: self.config.memory_cap,
            }),
            Enforcement::Audit => {
                self.trace.violations.push(CapViolation { round, machine, kind, load });
                Ok(())
            }
        }
    }

    /// Runs one communication round.
    pub fn shuffle<P: Words + Clone>(
        &mut self,
        stage: &str,
        outboxes: Vec<Vec<Message<P>>>,
    ) -> Result<Vec<Inbox<P>>> {
        let machines = self.config.num_machines;
        if outboxes.len() != machines {
            return Err(Error::InvalidConfig(format!(
                "{} outboxes for {machines} machines",
                outboxes.len()
            )));
        }
        let round = self.trace.rounds + 1;
        let mut sent = vec![0usize; machines];
        let mut recv = vec![0usize; machines];
        let mut inboxes: Vec<Inbox<P>> = (0..machines).map(|_| BTreeMap::new()).collect();
        for (src, outbox) in outboxes.into_iter().enumerate() {
            for Message { dests, payload } in outbox {
                if dests.is_empty() {
                    return Err(Error::InvalidConfig(format!("round {round}: message without destination")));
                }
                let w = payload.words();
                sent[src] += w + dests.len() - 1;
                for key in dests {
                    if let Key::Machine(m) = key {
                        if m as usize >= machines {
                            return Err(Error::InvalidConfig(format!(
                                "round {round}: no machine {m} among {machines}"
                            )));
                        }
                    }
                    let dst = key.machine(machines);
                    recv[dst] += w;
                    inboxes[dst].entry(key).or_default().push(payload.clone());
                }
            }
        }
        let mut resident = recv.clone();
        for (key, &w) in &self.held {
            resident[key.machine(machines)] += w;
        }
        for m in 0..machines {
            self.check(round, m, "sent", sent[m])?;
            self.check(round, m, "received", recv[m])?;
            self.check(round, m, "holds", resident[m])?;
        }
        let total: usize = recv.iter().sum();
        self.trace.rounds = round;
        self.trace.total_words += total;
        self.trace.per_round.push(RoundLoad {
            stage: stage.to_string(),
            sent_max: sent.iter().copied().max().unwrap_or(0),
            recv_max: recv.iter().copied().max().unwrap_or(0),
            resident_max: resident.iter().copied().max().unwrap_or(0),
            total_words: total,
        });
        Ok(inboxes)
    }
}

#[derive(Clone, Debug)]
enum Msg {
    EdgeRecord { u: Vertex, v: Vertex },
    Incident { e: EdgeId, other: Vertex },
    SliceCount { slice: u32, count: u32 },
    Level { level: u32 },
    Partial { at_level: Vec<Vertex>, at_next: Vec<Vertex> },
    Sketch(Arc<SampleSketch>),
    Decision { agree: bool },
    Removed { count: u32 },
    VertexInfo { light: bool, label: u32 },
    Endpoint { vertex: Vertex, light: bool, label: u32 },
    Candidate { e: EdgeId, kept: bool, label: u32 },
    PartialMax { label: u32 },
    Label { label: u32 },
    EndpointLabel { vertex: Vertex, label: u32 },
    EdgeLabel { label: u32 },
    Output { vertex: Vertex, label: u32 },
}

impl Words for Msg {
    fn words(&self) -> usize {
        match self {
            Msg::Removed { .. }
            | Msg::PartialMax { .. }
            | Msg::Label { .. }
            | Msg::EdgeLabel { .. }
            | Msg::Level { .. }
            | Msg::Decision { .. } => 1,
            Msg::EdgeRecord { .. }
            | Msg::Incident { .. }
            | Msg::SliceCount { .. }
            | Msg::VertexInfo { .. }
            | Msg::EndpointLabel { .. }
            | Msg::Output { .. } => 2,
            Msg::Endpoint { .. } | Msg::Candidate { .. } => 3,
            Msg::Partial { at_level, at_next } => 2 + at_level.len() + at_next.len(),
            Msg::Sketch(s) => s.words(),
        }
    }
}

#[derive(Default)]
struct SliceState {
    incident: Vec<(EdgeId, Vertex)>,
    level: u32,
    removed: u32,
    kept: Vec<bool>,
    sketch: Option<Arc<SampleSketch>>,
    label: u32,
    best: u32,
}

impl SliceState {
    fn words(&self) -> usize {
        4 * self.incident.len() + 4 + self.sketch.as_ref().map_or(0, |s| s.words())
    }
}

struct VertexState {
    degree: usize,
    slices: Vec<u32>,
    active_slices: Vec<u32>,
    sketch: Option<Arc<SampleSketch>>,
    light: bool,
    label: u32,
}

impl VertexState {
    fn words(&self) -> usize {
        6 + self.slices.len() + self.sketch.as_ref().map_or(0, |s| s.words())
    }
}

#[derive(Clone, Copy, Default)]
struct EdgeState {
    u: Vertex,
    v: Vertex,
    agree: bool,
    kept: bool,
}

const EDGE_WORDS: usize = 6;

fn slice_of(e: EdgeId, fanout: u32) -> u32 {
    (xxh3_64_with_seed(&e.to_le_bytes(), ROUTE_SEED ^ 0x51) % fanout as u64) as u32
}

fn expect_inbox<P>(inboxes: Vec<Inbox<P>>) -> impl Iterator<Item = (Key, Vec<P>)> {
    inboxes.into_iter().flat_map(|b| b.into_iter())
}

/// Runs sparsification and four max-label rounds on the simulator.
///
/// Returns the clustering (labels are component maxima, as in
/// [`crate::components::label_propagation_4`]) and the round trace.
pub fn run_mpc_pipeline(
    g: &SignedGraph,
    params: &Params,
    mode: OracleMode,
    config: MpcConfig,
) -> Result<(Clustering, MpcTrace)> {
    run_mpc_pipeline_with_rule(g, params, mode, ThresholdRule::ExactWhenComplete, config)
}

pub fn run_mpc_pipeline_with_rule(
    g: &SignedGraph,
    params: &Params,
    mode: OracleMode,
    rule: ThresholdRule,
    config: MpcConfig,
) -> Result<(Clustering, MpcTrace)> {
    params.validate()?;
    let cfg = sketch_config(params, g.n(), mode, rule);
    MpcPipeline::new(g.n(), config, cfg).run(g)
}

struct MpcPipeline {
    sim: Simulator,
    cfg: SketchConfig,
    n: usize,
    fanout: u32,
    edges: HashMap<EdgeId, EdgeState>,
    slices: HashMap<(Vertex, u32), SliceState>,
    vertices: Vec<VertexState>,
}

impl MpcPipeline {
    fn new(n: usize, config: MpcConfig, cfg: SketchConfig) -> Self {
        let fanout = config.slice_fanout(n);
        let vertices = (0..n as Vertex)
            .map(|v| VertexState {
                degree: 1,
                slices: Vec::new(),
                active_slices: Vec::new(),
                sketch: None,
                light: false,
                label: v,
            })
            .collect();
        MpcPipeline {
            sim: Simulator::new(config),
            cfg,
            n,
            fanout,
            edges: HashMap::new(),
            slices: HashMap::new(),
            vertices,
        }
    }

    fn outboxes(&self) -> Outboxes<Msg> {
        Outboxes::new(self.sim.config().num_machines)
    }

    fn hold_slice(&mut self, v: Vertex, t: u32) {
        let w = self.slices[&(v, t)].words();
        self.sim.hold(Key::Slice(v, t), w);
    }

    fn hold_vertex(&mut self, v: Vertex) {
        let w = self.vertices[v as usize].words();
        self.sim.hold(Key::Vertex(v), w);
    }

    fn run(mut self, g: &SignedGraph) -> Result<(Clustering, MpcTrace)> {
        for v in 0..self.n as Vertex {
            self.hold_vertex(v);
        }
        self.distribute(g)?;
        self.aggregate_degrees()?;
        self.assemble_sketches()?;
        self.decide_edges()?;
        self.mark_light()?;
        self.first_propagation()?;
        for _ in 1..PROPAGATION_ROUNDS {
            self.propagation_round()?;
        }
        let clustering = self.collect()?;
        let trace = self.sim.into_trace();
        debug_assert_eq!(trace.rounds, MPC_ROUNDS);
        Ok((clustering, trace))
    }

    /// Round 1: edges leave their arbitrary input machines for their edge
    /// group and both endpoint slices.
    fn distribute(&mut self, g: &SignedGraph) -> Result<()> {
        let machines = self.sim.config().num_machines;
        let mut input = vec![0usize; machines];
        let mut out = self.outboxes();
        for (e, &(u, v)) in g.edges().iter().enumerate() {
            let e = e as EdgeId;
            let home = Key::Machine((e as usize % machines) as u32);
            input[e as usize % machines] += 1;
            let t = slice_of(e, self.fanout);
            out.send(home, Key::Edge(e), Msg::EdgeRecord { u, v });
            out.send(home, Key::Slice(u, t), Msg::Incident { e, other: v });
            out.send(home, Key::Slice(v, t), Msg::Incident { e, other: u });
        }
        self.sim.check_input(&input)?;
        for (key, msgs) in expect_inbox(self.sim.shuffle("distribute", out.into_inner())?) {
            match key {
                Key::Edge(e) => {
                    for m in msgs {
                        if let Msg::EdgeRecord { u, v } = m {
                            self.edges.insert(e, EdgeState { u, v, ..EdgeState::default() });
                        }
                    }
                    self.sim.hold(key, EDGE_WORDS);
                }
                Key::Slice(v, t) => {
                    let slice = self.slices.entry((v, t)).or_default();
                    for m in msgs {
                        if let Msg::Incident { e, other } = m {
                            slice.incident.push((e, other));
                        }
                    }
                    slice.incident.sort_unstable();
                    self.hold_slice(v, t);
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Round 2: per-slice counts meet at the vertex.
    fn aggregate_degrees(&mut self) -> Result<()> {
        let mut out = self.outboxes();
        for (&(v, t), slice) in &self.slices {
            out.send(
                Key::Slice(v, t),
                Key::Vertex(v),
                Msg::SliceCount { slice: t, count: slice.incident.len() as u32 },
            );
        }
        for (key, msgs) in expect_inbox(self.sim.shuffle("degree", out.into_inner())?) {
            if let Key::Vertex(v) = key {
                let state = &mut self.vertices[v as usize];
                for m in msgs {
                    if let Msg::SliceCount { slice, count } = m {
                        state.degree += count as usize;
                        state.slices.push(slice);
                    }
                }
                state.slices.sort_unstable();
                self.hold_vertex(v);
            }
        }
        Ok(())
    }

    /// Rounds 3–4: the vertex announces its level; slices flip the shared
    /// coins for their neighbors and return the partial samples.
    fn assemble_sketches(&mut self) -> Result<()> {
        let beta = self.cfg.params.beta;
        let mut out = self.outboxes();
        for (v, state) in self.vertices.iter().enumerate() {
            if state.slices.is_empty() {
                continue;
            }
            let level = level_index(state.degree, beta).k;
            let dests = state.slices.iter().map(|&t| Key::Slice(v as Vertex, t)).collect();
            out.push(
                Key::Vertex(v as Vertex),
                Message::multicast(dests, Msg::Level { level }),
            );
        }
        let seed = self.cfg.params.seed;
        let mut out = {
            let inboxes = self.sim.shuffle("level", out.into_inner())?;
            let mut next = self.outboxes();
            for (key, msgs) in expect_inbox(inboxes) {
                let Key::Slice(v, t) = key else { continue };
                let slice = self.slices.get_mut(&(v, t)).expect("slice exists");
                for m in msgs {
                    if let Msg::Level { level, .. } = m {
                        slice.level = level;
                    }
                }
                let sample = |k: u32| -> Vec<Vertex> {
                    let p = self.cfg.probability(k);
                    slice
                        .incident
                        .iter()
                        .map(|&(_, w)| w)
                        .filter(|&w| sample_member(seed, w, k, p))
                        .collect()
                };
                let partial = Msg::Partial { at_level: sample(slice.level), at_next: sample(slice.level + 1) };
                next.send(key, Key::Vertex(v), partial);
            }
            next
        };
        // Isolated vertices receive nothing; their sketch is the loop alone.
        let inboxes = self.sim.shuffle("sketch-assembly", std::mem::replace(&mut out, self.outboxes()).into_inner())?;
        let mut partials: HashMap<Vertex, Vec<Msg>> = HashMap::new();
        for (key, msgs) in expect_inbox(inboxes) {
            if let Key::Vertex(v) = key {
                partials.insert(v, msgs);
            }
        }
        for v in 0..self.n as Vertex {
            let state = &self.vertices[v as usize];
            let level = level_index(state.degree, beta).k;
            let mut at_level = Vec::new();
            let mut at_next = Vec::new();
            for m in partials.remove(&v).unwrap_or_default() {
                if let Msg::Partial { at_level: a, at_next: b } = m {
                    at_level.extend(a);
                    at_next.extend(b);
                }
            }
            if sample_member(seed, v, level, self.cfg.probability(level)) {
                at_level.push(v);
            }
            if sample_member(seed, v, level + 1, self.cfg.probability(level + 1)) {
                at_next.push(v);
            }
            at_level.sort_unstable();
            at_next.sort_unstable();
            let sketch = SampleSketch {
                owner: v,
                degree: state.degree,
                level,
                samples_at_level: at_level,
                samples_at_next: at_next,
            };
            sketch.check_cap(&self.cfg)?;
            self.vertices[v as usize].sketch = Some(Arc::new(sketch));
            self.hold_vertex(v);
        }
        Ok(())
    }

    /// Rounds 5–6: sketches travel vertex → slices → edges, where each edge
    /// runs the sampled agreement test.
    fn decide_edges(&mut self) -> Result<()> {
        let mut out = self.outboxes();
        for (v, state) in self.vertices.iter_mut().enumerate() {
            let sketch = state.sketch.take().expect("sketch assembled");
            if state.slices.is_empty() {
                continue;
            }
            let dests = state.slices.iter().map(|&t| Key::Slice(v as Vertex, t)).collect();
            out.push(Key::Vertex(v as Vertex), Message::multicast(dests, Msg::Sketch(sketch)));
        }
        for v in 0..self.n as Vertex {
            self.hold_vertex(v);
        }
        let inboxes = self.sim.shuffle("sketch-to-slices", out.into_inner())?;
        let mut out = self.outboxes();
        for (key, msgs) in expect_inbox(inboxes) {
            let Key::Slice(v, t) = key else { continue };
            let slice = self.slices.get_mut(&(v, t)).expect("slice exists");
            for m in msgs {
                if let Msg::Sketch(s) = m {
                    let dests = slice.incident.iter().map(|&(e, _)| Key::Edge(e)).collect();
                    out.push(key, Message::multicast(dests, Msg::Sketch(Arc::clone(&s))));
                    slice.sketch = Some(s);
                }
            }
            self.hold_slice(v, t);
        }
        let inboxes = self.sim.shuffle("sketch-to-edges", out.into_inner())?;
        for slice in self.slices.values_mut() {
            slice.sketch = None;
        }
        let keys: Vec<(Vertex, u32)> = self.slices.keys().copied().collect();
        for (v, t) in keys {
            self.hold_slice(v, t);
        }
        for (key, msgs) in expect_inbox(inboxes) {
            let Key::Edge(e) = key else { continue };
            let sketches: Vec<Arc<SampleSketch>> = msgs
                .into_iter()
                .filter_map(|m| if let Msg::Sketch(s) = m { Some(s) } else { None })
                .collect();
            let [a, b] = sketches.as_slice() else {
                return Err(Error::InvalidConfig(format!("edge {e} received {} sketches", sketches.len())));
            };
            let agree = agreement_sampled(a, b, &self.cfg)?;
            self.edges.get_mut(&e).expect("edge exists").agree = agree;
        }
        Ok(())
    }

    /// Rounds 7–8: decisions flow back to the slices, removal counts to the
    /// vertex, which labels itself light or heavy.
    fn mark_light(&mut self) -> Result<()> {
        let fanout = self.fanout;
        let mut out = self.outboxes();
        for (&e, edge) in &self.edges {
            let t = slice_of(e, fanout);
            let msg = Msg::Decision { agree: edge.agree };
            out.push(Key::Edge(e), Message::multicast(vec![Key::Slice(edge.u, t), Key::Slice(edge.v, t)], msg));
        }
        let inboxes = self.sim.shuffle("decision", out.into_inner())?;
        let mut out = self.outboxes();
        for (key, msgs) in expect_inbox(inboxes) {
            let Key::Slice(v, t) = key else { continue };
            let slice = self.slices.get_mut(&(v, t)).expect("slice exists");
            slice.removed = msgs
                .iter()
                .filter(|m| matches!(m, Msg::Decision { agree: false, .. }))
                .count() as u32;
            out.send(key, Key::Vertex(v), Msg::Removed { count: slice.removed });
        }
        let inboxes = self.sim.shuffle("removed-count", out.into_inner())?;
        let mut removed = vec![0usize; self.n];
        for (key, msgs) in expect_inbox(inboxes) {
            if let Key::Vertex(v) = key {
                for m in msgs {
                    if let Msg::Removed { count } = m {
                        removed[v as usize] += count as usize;
                    }
                }
            }
        }
        let lambda = self.cfg.params.lambda;
        for (v, state) in self.vertices.iter_mut().enumerate() {
            state.light = is_light(removed[v], state.degree, lambda);
        }
        Ok(())
    }

    /// Rounds 9–12: lightness and initial labels reach the edges, which drop
    /// light–light edges and return the first max-label candidates.
    fn first_propagation(&mut self) -> Result<()> {
        let mut out = self.outboxes();
        for (v, state) in self.vertices.iter().enumerate() {
            if state.slices.is_empty() {
                continue;
            }
            let dests = state.slices.iter().map(|&t| Key::Slice(v as Vertex, t)).collect();
            let msg = Msg::VertexInfo { light: state.light, label: state.label };
            out.push(Key::Vertex(v as Vertex), Message::multicast(dests, msg));
        }
        let inboxes = self.sim.shuffle("lightness", out.into_inner())?;
        let mut out = self.outboxes();
        for (key, msgs) in expect_inbox(inboxes) {
            let Key::Slice(v, _) = key else { continue };
            for m in msgs {
                if let Msg::VertexInfo { light, label } = m {
                    let slice = &self.slices[&slice_key(key)];
                    let dests = slice.incident.iter().map(|&(e, _)| Key::Edge(e)).collect();
                    out.push(key, Message::multicast(dests, Msg::Endpoint { vertex: v, light, label }));
                }
            }
        }
        let inboxes = self.sim.shuffle("endpoint-info", out.into_inner())?;
        let fanout = self.fanout;
        let mut out = self.outboxes();
        for (key, msgs) in expect_inbox(inboxes) {
            let Key::Edge(e) = key else { continue };
            let edge = self.edges.get_mut(&e).expect("edge exists");
            let mut info = [(false, 0u32); 2];
            for m in msgs {
                if let Msg::Endpoint { vertex, light, label } = m {
                    info[usize::from(vertex == edge.v)] = (light, label);
                }
            }
            let ((light_u, label_u), (light_v, label_v)) = (info[0], info[1]);
            edge.kept = edge.agree && !(light_u && light_v);
            let t = slice_of(e, fanout);
            out.send(key, Key::Slice(edge.u, t), Msg::Candidate { e, kept: edge.kept, label: label_v });
            out.send(key, Key::Slice(edge.v, t), Msg::Candidate { e, kept: edge.kept, label: label_u });
        }
        let inboxes = self.sim.shuffle("propagate-edges", out.into_inner())?;
        let mut out = self.outboxes();
        for (key, msgs) in expect_inbox(inboxes) {
            let Key::Slice(v, t) = key else { continue };
            let slice = self.slices.get_mut(&(v, t)).expect("slice exists");
            slice.kept = vec![false; slice.incident.len()];
            let mut best = None;
            for m in msgs {
                if let Msg::Candidate { e, kept, label } = m {
                    if kept {
                        let i = slice.incident.binary_search_by_key(&e, |&(x, _)| x).expect("incident edge");
                        slice.kept[i] = true;
                        best = Some(best.map_or(label, |b: u32| b.max(label)));
                    }
                }
            }
            if let Some(label) = best {
                out.send(key, Key::Vertex(v), Msg::PartialMax { label });
            }
        }
        self.finish_propagation("propagate-vertices", out, true)
    }

    /// Applies per-slice maxima at the vertices.
    fn finish_propagation(&mut self, stage: &str, out: Outboxes<Msg>, record_active: bool) -> Result<()> {
        let inboxes = self.sim.shuffle(stage, out.into_inner())?;
        for (key, msgs) in expect_inbox(inboxes) {
            let Key::Vertex(v) = key else { continue };
            let state = &mut self.vertices[v as usize];
            for m in msgs {
                if let Msg::PartialMax { label } = m {
                    state.label = state.label.max(label);
                }
            }
        }
        if record_active {
            for ((v, t), slice) in &self.slices {
                if slice.kept.iter().any(|&k| k) {
                    self.vertices[*v as usize].active_slices.push(*t);
                }
            }
            for state in &mut self.vertices {
                state.active_slices.sort_unstable();
            }
        }
        Ok(())
    }

    /// One max-label round over kept edges: vertex → slices → edges →
    /// slices → vertex.
    fn propagation_round(&mut self) -> Result<()> {
        let mut out = self.outboxes();
        for (v, state) in self.vertices.iter().enumerate() {
            if state.active_slices.is_empty() {
                continue;
            }
            let dests = state.active_slices.iter().map(|&t| Key::Slice(v as Vertex, t)).collect();
            out.push(Key::Vertex(v as Vertex), Message::multicast(dests, Msg::Label { label: state.label }));
        }
        let inboxes = self.sim.shuffle("label-to-slices", out.into_inner())?;
        let mut out = self.outboxes();
        for (key, msgs) in expect_inbox(inboxes) {
            let Key::Slice(v, t) = key else { continue };
            let slice = self.slices.get_mut(&(v, t)).expect("slice exists");
            for m in msgs {
                if let Msg::Label { label } = m {
                    slice.label = label;
                    let dests: Vec<Key> = slice
                        .incident
                        .iter()
                        .zip(&slice.kept)
                        .filter(|(_, &k)| k)
                        .map(|(&(e, _), _)| Key::Edge(e))
                        .collect();
                    out.push(key, Message::multicast(dests, Msg::EndpointLabel { vertex: v, label }));
                }
            }
        }
        let inboxes = self.sim.shuffle("label-to-edges", out.into_inner())?;
        let fanout = self.fanout;
        let mut out = self.outboxes();
        for (key, msgs) in expect_inbox(inboxes) {
            let Key::Edge(e) = key else { continue };
            let edge = self.edges[&e];
            let t = slice_of(e, fanout);
            for m in msgs {
                if let Msg::EndpointLabel { vertex, label } = m {
                    let other = if vertex == edge.u { edge.v } else { edge.u };
                    out.send(key, Key::Slice(other, t), Msg::EdgeLabel { label });
                }
            }
        }
        let inboxes = self.sim.shuffle("propagate-edges", out.into_inner())?;
        let mut out = self.outboxes();
        for (key, msgs) in expect_inbox(inboxes) {
            let Key::Slice(v, t) = key else { continue };
            let slice = self.slices.get_mut(&(v, t)).expect("slice exists");
            let mut best = slice.label;
            for m in msgs {
                if let Msg::EdgeLabel { label } = m {
                    best = best.max(label);
                }
            }
            slice.best = best;
            out.send(key, Key::Vertex(v), Msg::PartialMax { label: best });
        }
        self.finish_propagation("propagate-vertices", out, false)
    }

    /// Final round: labels land in output blocks of at most a quarter of the cap.
    fn collect(&mut self) -> Result<Clustering> {
        let block = (self.sim.config().memory_cap / 8).max(1) as u32;
        let mut out = self.outboxes();
        for (v, state) in self.vertices.iter().enumerate() {
            let v = v as Vertex;
            out.send(Key::Vertex(v), Key::Output(v / block), Msg::Output { vertex: v, label: state.label });
        }
        let inboxes = self.sim.shuffle("output", out.into_inner())?;
        let mut assignment = vec![0u32; self.n];
        for (_, msgs) in expect_inbox(inboxes) {
            for m in msgs {
                if let Msg::Output { vertex, label } = m {
                    assignment[vertex as usize] = label;
                }
            }
        }
        Ok(Clustering::from_assignment(assignment))
    }
}

fn slice_key(key: Key) -> (Vertex, u32) {
    match key {
        Key::Slice(v, t) => (v, t),
        _ => unreachable!("slice key expected"),
    }
}

/// Machine count for which a run on `g` keeps the average machine at
/// `1/slack` of the cap in every round. Found by a dry run on one machine in
/// audit mode, whose per-round maxima are the round totals.
pub fn plan_machines(g: &SignedGraph, params: &Params, mode: OracleMode, delta: f64, slack: f64) -> Result<usize> {
    let probe = MpcConfig {
        num_machines: 1,
        delta,
        memory_cap: (g.n().max(1) as f64).powf(delta).ceil() as usize,
        enforcement: Enforcement::Audit,
    };
    let (_, trace) = run_mpc_pipeline(g, params, mode, probe.clone())?;
    let peak = trace.peak_load() as f64;
    Ok(((slack * peak / probe.memory_cap as f64).ceil() as usize).max(1))
}

/// Constant `C` of the communication bound, `64 + 24·a/β`.
///
/// A sketch holds at most about `2·a·ln n/(β(1−β))` samples. Every "+" edge
/// (loops included) receives two sketches and sends them through slices, and
/// every other stage moves a constant number of words per edge or vertex.
pub fn communication_constant(params: &Params) -> f64 {
    64.0 + 24.0 * params.a / params.beta
}

/// `C·|E⁺|·ln n` words, with the `n` loops counted in `|E⁺|`.
pub fn communication_bound(g: &SignedGraph, params: &Params) -> f64 {
    let ln = (g.n().max(2) as f64).ln();
    communication_constant(params) * (g.m_plus() + g.n()) as f64 * ln
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::components::label_propagation_4;
    use crate::eval::gen_gnp;
    use crate::pipeline::run_in_memory;

    #[derive(Clone, Debug)]
    struct W(usize);

    impl Words for W {
        fn words(&self) -> usize {
            self.0
        }
    }

    fn config(machines: usize, cap_n: usize, delta: f64, enforcement: Enforcement) -> MpcConfig {
        MpcConfig::new(cap_n, 0, machines, delta, enforcement).unwrap()
    }

    #[test]
    fn empty_shuffle() {
        let mut sim = Simulator::new(config(4, 100, 0.5, Enforcement::Strict));
        let inboxes = sim.shuffle::<W>("noop", vec![Vec::new(); 4]).unwrap();
        assert!(inboxes.iter().all(|b| b.is_empty()));
        let r = &sim.trace().per_round[0];
        assert_eq!((r.sent_max, r.recv_max, r.resident_max, r.total_words), (0, 0, 0, 0));
    }

    #[test]
    fn fan_in_to_one_machine() {
        let machines = 5;
        let mut sim = Simulator::new(config(machines, 100, 0.5, Enforcement::Strict));
        let out: Vec<Vec<Message<W>>> =
            (0..machines).map(|_| vec![Message::to(Key::Machine(0), W(1))]).collect();
        let inboxes = sim.shuffle("fan-in", out).unwrap();
        assert_eq!(inboxes[0][&Key::Machine(0)].len(), machines);
        assert_eq!(sim.trace().per_round[0].recv_max, machines);
    }

    #[test]
    fn strict_cap_violation_names_machine_and_round() {
        let cfg = config(3, 100, 0.5, Enforcement::Strict);
        let cap = cfg.memory_cap;
        assert_eq!(cap, 10);
        let mut sim = Simulator::new(cfg);
        sim.shuffle::<W>("warmup", vec![Vec::new(); 3]).unwrap();
        let mut out = vec![Vec::new(); 3];
        out[1].push(Message::to(Key::Machine(2), W(cap / 2)));
        out[0].push(Message::to(Key::Machine(2), W(cap / 2 + 1)));
        match sim.shuffle("overflow", out).unwrap_err() {
            Error::CapViolation { round, machine, kind, load, cap: c } => {
                assert_eq!((round, machine, kind, load, c), (2, 2, "received", cap + 1, cap));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn audit_records_instead_of_failing() {
        let mut sim = Simulator::new(config(2, 100, 0.5, Enforcement::Audit));
        let out = vec![vec![Message::to(Key::Machine(1), W(11))], Vec::new()];
        sim.shuffle("overflow", out).unwrap();
        assert_eq!(sim.trace().violations.len(), 3);
    }

    #[test]
    fn multicast_accounting() {
        let mut sim = Simulator::new(config(1, 10_000, 0.9, Enforcement::Strict));
        let dests = vec![Key::Vertex(1), Key::Vertex(2), Key::Vertex(3)];
        sim.shuffle("mc", vec![vec![Message::multicast(dests, W(10))]]).unwrap();
        let r = &sim.trace().per_round[0];
        assert_eq!((r.sent_max, r.recv_max), (12, 30));
    }

    #[test]
    fn config_rejects_undersized_clusters() {
        assert!(MpcConfig::new(100, 1000, 2, 0.5, Enforcement::Audit).is_err());
        assert!(MpcConfig::new(100, 10, 0, 0.5, Enforcement::Audit).is_err());
        assert!(MpcConfig::new(100, 10, 2, 1.0, Enforcement::Audit).is_err());
        assert!(MpcConfig::new(100, 20, 2, 0.5, Enforcement::Audit).is_ok());
    }

    #[test]
    fn clique_is_one_cluster() {
        let g = gen_gnp(4, 1.0, 0);
        let cfg = MpcConfig::for_graph(&g, 2, 0.9, Enforcement::Audit).unwrap();
        let (c, trace) = run_mpc_pipeline(&g, &Params::new(0.05, 0.05), OracleMode::Sketch, cfg).unwrap();
        assert_eq!(c.num_clusters(), 1);
        assert_eq!(trace.rounds, MPC_ROUNDS);
    }

    #[test]
    fn path_is_three_singletons() {
        let g = SignedGraph::build(3, [(0, 1), (1, 2)]).unwrap();
        let cfg = MpcConfig::for_graph(&g, 2, 0.9, Enforcement::Audit).unwrap();
        let (c, trace) = run_mpc_pipeline(&g, &Params::new(0.05, 0.05), OracleMode::Exact, cfg).unwrap();
        assert_eq!(c.num_clusters(), 3);
        assert_eq!(trace.rounds, MPC_ROUNDS);
    }

    #[test]
    fn isolated_vertices_and_empty_graph() {
        let g = SignedGraph::build(5, []).unwrap();
        let cfg = MpcConfig::for_graph(&g, 3, 0.5, Enforcement::Audit).unwrap();
        let (c, trace) = run_mpc_pipeline(&g, &Params::default(), OracleMode::Sketch, cfg).unwrap();
        assert!(!trace.violations.is_empty());
        assert_eq!(c.num_clusters(), 5);
        assert_eq!(trace.rounds, MPC_ROUNDS);
    }

    #[test]
    fn matches_in_memory_label_propagation() {
        for seed in 0..4 {
            let g = gen_gnp(120, 0.5, seed);
            let params = Params::new(0.2, 0.2).with_a(0.3).with_seed(seed);
            for mode in [OracleMode::Exact, OracleMode::Sketch] {
                let run = run_in_memory(&g, &params, mode).unwrap();
                let lp = label_propagation_4(&run.sparsified);
                for machines in [50, 64, 100] {
                    let cfg = MpcConfig::for_graph(&g, machines, 0.9, Enforcement::Audit).unwrap();
                    let (c, _) = run_mpc_pipeline(&g, &params, mode, cfg).unwrap();
                    assert_eq!(c, lp, "seed {seed}, mode {mode}, {machines} machines");
                }
            }
        }
    }

    #[test]
    fn trace_serializes() {
        let g = gen_gnp(10, 0.5, 1);
        let cfg = MpcConfig::for_graph(&g, 4, 0.9, Enforcement::Audit).unwrap();
        let (_, trace) = run_mpc_pipeline(&g, &Params::default(), OracleMode::Exact, cfg).unwrap();
        let v: serde_json::Value = serde_json::from_str(&trace.to_json().unwrap()).unwrap();
        assert_eq!(v["rounds"], MPC_ROUNDS);
        assert_eq!(v["per_round"].as_array().unwrap().len(), MPC_ROUNDS);
        assert!(v["per_round"][0]["sent_max"].is_number());
        assert!(v["total_words"].as_u64().unwrap() > 0);
    }
}

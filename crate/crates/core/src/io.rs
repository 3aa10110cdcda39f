//! Edge-list ingestion and clustering output.
//!
//! Input: one edge per line, two whitespace-separated non-negative integers.
//! Lines starting with `#` and blank lines are skipped. External ids may be
//! sparse; they are remapped to dense ids in first-appearance order and the
//! mapping is kept so output files can use the original ids.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::components::Clustering;
use crate::error::{Error, Result};
use crate::graph::{SignedGraph, Vertex};

/// Dense-id assignment for sparse external ids.
#[derive(Clone, Debug, Default)]
pub struct IdMap {
    to_dense: HashMap<u64, Vertex>,
    original: Vec<u64>,
}

impl IdMap {
    /// Identity mapping over `0..n`.
    pub fn identity(n: usize) -> Self {
        IdMap {
            to_dense: (0..n as u64).map(|i| (i, i as Vertex)).collect(),
            original: (0..n as u64).collect(),
        }
    }

    pub fn intern(&mut self, id: u64) -> Vertex {
        if let Some(&v) = self.to_dense.get(&id) {
            return v;
        }
        let v = self.original.len() as Vertex;
        self.to_dense.insert(id, v);
        self.original.push(id);
        v
    }

    pub fn get(&self, id: u64) -> Option<Vertex> {
        self.to_dense.get(&id).copied()
    }

    pub fn original(&self, v: Vertex) -> u64 {
        self.original[v as usize]
    }

    pub fn len(&self) -> usize {
        self.original.len()
    }

    pub fn is_empty(&self) -> bool {
        self.original.is_empty()
    }
}

/// Parses one edge-list line. `Ok(None)` for comments and blank lines.
pub fn parse_edge_line(line: &str, line_no: usize) -> Result<Option<(u64, u64)>> {
    let trimmed = line.trim();
    if trimmed.is_empty() || trimmed.starts_with('#') {
        return Ok(None);
    }
    let mut tokens = trimmed.split_whitespace();
    let mut next = |what: &str| -> Result<u64> {
        let tok = tokens.next().ok_or_else(|| Error::Parse {
            line: line_no,
            msg: format!("missing {what} vertex id"),
        })?;
        tok.parse::<u64>().map_err(|_| Error::Parse {
            line: line_no,
            msg: format!("invalid vertex id `{tok}`"),
        })
    };
    let u = next("first")?;
    let v = next("second")?;
    if let Some(extra) = tokens.next() {
        return Err(Error::Parse { line: line_no, msg: format!("unexpected token `{extra}`") });
    }
    Ok(Some((u, v)))
}

/// A parsed edge list in dense ids.
#[derive(Clone, Debug)]
pub struct EdgeList {
    pub ids: IdMap,
    pub edges: Vec<(Vertex, Vertex)>,
}

impl EdgeList {
    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn into_graph(self) -> Result<(SignedGraph, IdMap)> {
        let g = SignedGraph::build(self.ids.len(), self.edges)?;
        Ok((g, self.ids))
    }
}

pub fn read_edge_list<R: BufRead>(reader: R) -> Result<EdgeList> {
    let mut ids = IdMap::default();
    let mut edges = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if let Some((a, b)) = parse_edge_line(&line, i + 1)? {
            let u = ids.intern(a);
            let v = ids.intern(b);
            edges.push((u, v));
        }
    }
    Ok(EdgeList { ids, edges })
}

pub fn read_edge_list_file(path: &std::path::Path) -> Result<EdgeList> {
    let file = std::fs::File::open(path)?;
    read_edge_list(std::io::BufReader::new(file))
}

/// Writes `<original-id> <cluster-id>` per vertex with canonical cluster ids.
pub fn write_clustering<W: Write>(mut out: W, clustering: &Clustering, ids: &IdMap) -> Result<()> {
    let canon = clustering.canonical();
    for (v, c) in canon.assignment().iter().enumerate() {
        writeln!(out, "{} {}", ids.original(v as Vertex), c)?;
    }
    out.flush()?;
    Ok(())
}

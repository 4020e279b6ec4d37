use std::collections::HashSet;
use std::io::BufRead;

use crate::error::{Error, Result};

pub type NodeId = usize;
pub type EdgeId = usize;

/// Directed social graph with stable edge ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SocialGraph {
    node_count: usize,
    edges: Vec<(NodeId, NodeId)>,
    out_edges: Vec<Vec<EdgeId>>,
}

/// Rows discarded while loading a graph.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub self_loops: usize,
    pub duplicates: usize,
}

impl SocialGraph {
    /// Builds a graph from an edge list, rejecting self-loops, duplicates and
    /// out-of-range endpoints.
    pub fn new(node_count: usize, edges: Vec<(NodeId, NodeId)>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(edges.len());
        let mut out_edges = vec![Vec::new(); node_count];
        for (id, &(src, dst)) in edges.iter().enumerate() {
            if src >= node_count || dst >= node_count {
                return Err(Error::Contract(format!(
                    "edge ({src}, {dst}) has an endpoint outside 0..{node_count}"
                )));
            }
            if src == dst {
                return Err(Error::Contract(format!("self-loop at node {src}")));
            }
            if !seen.insert((src, dst)) {
                return Err(Error::Contract(format!("duplicate edge ({src}, {dst})")));
            }
            out_edges[src].push(id);
        }
        Ok(Self { node_count, edges, out_edges })
    }

    /// Same as [`SocialGraph::new`] but silently drops self-loops and repeats,
    /// keeping first occurrences in input order.
    pub fn from_edges_lossy(node_count: usize, edges: impl IntoIterator<Item = (NodeId, NodeId)>) -> Result<(Self, LoadReport)> {
        let mut report = LoadReport::default();
        let mut seen = HashSet::new();
        let mut kept = Vec::new();
        for (src, dst) in edges {
            if src == dst {
                report.self_loops += 1;
            } else if !seen.insert((src, dst)) {
                report.duplicates += 1;
            } else {
                kept.push((src, dst));
            }
        }
        Ok((Self::new(node_count, kept)?, report))
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> (NodeId, NodeId) {
        self.edges[id]
    }

    pub fn out_edges(&self, node: NodeId) -> &[EdgeId] {
        &self.out_edges[node]
    }

    pub fn out_degree(&self, node: NodeId) -> usize {
        self.out_edges[node].len()
    }

    pub fn max_out_degree(&self) -> usize {
        self.out_edges.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Edge id of `src → dst`, if present.
    pub fn find_edge(&self, src: NodeId, dst: NodeId) -> Option<EdgeId> {
        self.out_edges.get(src)?.iter().copied().find(|&e| self.edges[e].1 == dst)
    }

    pub fn check_nodes(&self, nodes: &[NodeId]) -> Result<()> {
        match nodes.iter().find(|&&v| v >= self.node_count) {
            Some(v) => Err(Error::Contract(format!("unknown node {v} (graph has {})", self.node_count))),
            None => Ok(()),
        }
    }
}

/// Parses a tab-separated edge list (`src<TAB>dst` per line, `#` comments).
///
/// Node count is one past the largest id seen. Self-loops and repeated rows
/// are dropped and counted in the report.
pub fn load_graph<R: BufRead>(reader: R) -> Result<(SocialGraph, LoadReport)> {
    let mut rows = Vec::new();
    let mut max_id: Option<NodeId> = None;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split('\t');
        let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::Parse { line: lineno, message: format!("expected two tab-separated ids, got {trimmed:?}") });
        };
        let parse = |s: &str| {
            s.trim().parse::<NodeId>().map_err(|e| Error::Parse { line: lineno, message: format!("bad node id {s:?}: {e}") })
        };
        let (src, dst) = (parse(a)?, parse(b)?);
        max_id = Some(max_id.map_or(src.max(dst), |m| m.max(src).max(dst)));
        rows.push((src, dst));
    }
    let node_count = max_id.map_or(0, |m| m + 1);
    let (graph, report) = SocialGraph::from_edges_lossy(node_count, rows)?;
    if report.self_loops > 0 || report.duplicates > 0 {
        log::warn!(
            "graph load dropped {} self-loop(s) and {} duplicate edge(s)",
            report.self_loops,
            report.duplicates
        );
    }
    Ok((graph, report))
}

/// Activation probability per edge id.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeProbabilities(Vec<f64>);

impl EdgeProbabilities {
    /// Values are clamped to `[0, 1]`; length must equal the edge count.
    pub fn new(graph: &SocialGraph, values: Vec<f64>) -> Result<Self> {
        if values.len() != graph.edge_count() {
            return Err(Error::Shape(format!(
                "{} probabilities for {} edges",
                values.len(),
                graph.edge_count()
            )));
        }
        if values.iter().any(|p| p.is_nan()) {
            return Err(Error::Numerical("NaN edge probability".into()));
        }
        Ok(Self(values.into_iter().map(|p| p.clamp(0.0, 1.0)).collect()))
    }

    pub fn uniform(graph: &SocialGraph, p: f64) -> Self {
        Self(vec![p.clamp(0.0, 1.0); graph.edge_count()])
    }

    pub fn get(&self, edge: EdgeId) -> f64 {
        self.0[edge]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn set(&mut self, edge: EdgeId, p: f64) {
        self.0[edge] = p.clamp(0.0, 1.0);
    }
}

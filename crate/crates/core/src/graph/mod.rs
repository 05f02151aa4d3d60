//! Undirected, optionally weighted graphs with dense integer node ids.
//!
//! A [`Graph`] is immutable once built. Node labels from input files are
//! remapped to `0..node_count`; the original labels are kept in a side table
//! for reporting.

mod generators;
mod stats;

pub use generators::{barbell, complete, cycle, erdos_renyi, karate, path, planted_partition, star};
pub use stats::{graph_stats, local_clustering, triangles_per_node, GraphStats};

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::io::BufRead;

use sha2::{Digest, Sha256};

use crate::error::{Result, XmError};

/// Undirected graph without self-loops or parallel edges.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    labels: Vec<String>,
    /// Canonical edge list, `u < v`, sorted.
    edges: Vec<(usize, usize, f64)>,
    /// Per-node neighbor lists sorted by id.
    adjacency: Vec<Vec<(usize, f64)>>,
    weighted: bool,
}

/// Outcome of parsing an edge list: the graph plus what was discarded.
#[derive(Debug, Clone)]
pub struct LoadReport {
    pub graph: Graph,
    pub self_loops_dropped: usize,
    pub duplicates_dropped: usize,
}

impl Graph {
    /// Build from an edge list over dense ids `0..node_count`.
    ///
    /// Self-loops are dropped and duplicate or reversed edges collapse onto
    /// the first occurrence. Weights must be finite and positive.
    pub fn from_edges(
        node_count: usize,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let labels = (0..node_count).map(|i| i.to_string()).collect();
        Ok(Self::build(node_count, labels, edges, false)?.0)
    }

    /// Unweighted convenience constructor.
    pub fn from_pairs(
        node_count: usize,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        Self::from_edges(node_count, pairs.into_iter().map(|(u, v)| (u, v, 1.0)))
    }

    fn build(
        node_count: usize,
        labels: Vec<String>,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
        weighted: bool,
    ) -> Result<(Self, usize, usize)> {
        if node_count == 0 {
            return Err(XmError::EmptyGraph);
        }
        let mut canon: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        let mut loops = 0;
        let mut dups = 0;
        for (u, v, w) in edges {
            if u >= node_count || v >= node_count {
                return Err(XmError::InvalidGraph(format!(
                    "edge ({u}, {v}) out of range for {node_count} nodes"
                )));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(XmError::InvalidGraph(format!(
                    "edge ({u}, {v}) has non-positive weight {w}"
                )));
            }
            if u == v {
                loops += 1;
                continue;
            }
            let key = (u.min(v), u.max(v));
            if canon.contains_key(&key) {
                dups += 1;
            } else {
                canon.insert(key, w);
            }
        }
        let mut adjacency = vec![Vec::new(); node_count];
        let edges: Vec<_> = canon.into_iter().map(|((u, v), w)| (u, v, w)).collect();
        for &(u, v, w) in &edges {
            adjacency[u].push((v, w));
            adjacency[v].push((u, w));
        }
        for list in &mut adjacency {
            list.sort_by_key(|&(v, _)| v);
        }
        let weighted = weighted || edges.iter().any(|&(_, _, w)| w != 1.0);
        Ok((
            Graph {
                labels,
                edges,
                adjacency,
                weighted,
            },
            loops,
            dups,
        ))
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Canonical edges `(u, v, w)` with `u < v`, sorted lexicographically.
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.adjacency[v]
    }

    pub fn neighbor_ids(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency[v].iter().map(|&(u, _)| u)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn weighted_degree(&self, v: usize) -> f64 {
        self.adjacency[v].iter().map(|&(_, w)| w).sum()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edge_weight(u, v).is_some()
    }

    pub fn edge_weight(&self, u: usize, v: usize) -> Option<f64> {
        let list = self.adjacency.get(u)?;
        list.binary_search_by_key(&v, |&(x, _)| x)
            .ok()
            .map(|i| list[i].1)
    }

    pub fn is_weighted(&self) -> bool {
        self.weighted
    }

    pub fn label(&self, v: usize) -> &str {
        &self.labels[v]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Subgraph on the same node set keeping only the given edges.
    pub fn with_edges(&self, edges: &[(usize, usize)]) -> Result<Graph> {
        let weighted = edges
            .iter()
            .map(|&(u, v)| (u, v, self.edge_weight(u, v).unwrap_or(1.0)));
        let (mut g, _, _) = Self::build(self.node_count(), self.labels.clone(), weighted, false)?;
        g.weighted = self.weighted;
        Ok(g)
    }

    /// Connected component id per node, numbered in order of first node.
    pub fn components(&self) -> Vec<usize> {
        let n = self.node_count();
        let mut comp = vec![usize::MAX; n];
        let mut next = 0;
        let mut stack = Vec::new();
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = next;
            stack.push(s);
            while let Some(u) = stack.pop() {
                for w in self.neighbor_ids(u) {
                    if comp[w] == usize::MAX {
                        comp[w] = next;
                        stack.push(w);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    pub fn is_connected(&self) -> bool {
        self.components().iter().all(|&c| c == 0)
    }

    /// Serialize to the edge-list text format accepted by [`load_edge_list`].
    /// Dense ids are written; weights only when the graph is weighted.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for &(u, v, w) in &self.edges {
            if self.weighted {
                let _ = writeln!(out, "{u} {v} {w}");
            } else {
                let _ = writeln!(out, "{u} {v}");
            }
        }
        out
    }

    /// SHA-256 of the canonical edge-list serialization, hex encoded.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(format!("n={}\n", self.node_count()).as_bytes());
        h.update(self.to_edge_list().as_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Parse an edge list: one `u v` or `u v w` per line, `#` starts a comment.
///
/// Labels are arbitrary tokens. When every label is a non-negative integer,
/// dense ids follow numeric order; otherwise they follow first appearance.
/// With `weighted == false` any extra columns are ignored.
pub fn load_edge_list<R: BufRead>(source: R, weighted: bool) -> Result<LoadReport> {
    let mut raw: Vec<(String, String, f64)> = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let (u, v) = match (tokens.next(), tokens.next()) {
            (Some(u), Some(v)) => (u.to_string(), v.to_string()),
            _ => {
                return Err(XmError::Parse {
                    line: lineno,
                    msg: format!("expected 'u v' or 'u v w', got '{content}'"),
                })
            }
        };
        let w = if weighted {
            let tok = tokens.next().ok_or_else(|| XmError::Parse {
                line: lineno,
                msg: "missing weight column".into(),
            })?;
            let w: f64 = tok.parse().map_err(|_| XmError::Parse {
                line: lineno,
                msg: format!("invalid weight '{tok}'"),
            })?;
            if !(w.is_finite() && w > 0.0) {
                return Err(XmError::Parse {
                    line: lineno,
                    msg: format!("weight must be positive, got {w}"),
                });
            }
            w
        } else {
            1.0
        };
        raw.push((u, v, w));
    }
    if raw.is_empty() {
        return Err(XmError::EmptyGraph);
    }

    let mut order: Vec<String> = Vec::new();
    let mut seen: HashMap<String, ()> = HashMap::new();
    for (u, v, _) in &raw {
        for t in [u, v] {
            if seen.insert(t.clone(), ()).is_none() {
                order.push(t.clone());
            }
        }
    }
    if order.iter().all(|t| t.parse::<u64>().is_ok()) {
        order.sort_by_key(|t| t.parse::<u64>().unwrap());
    }
    let ids: HashMap<&str, usize> = order
        .iter()
        .enumerate()
        .map(|(i, t)| (t.as_str(), i))
        .collect();
    let edges: Vec<_> = raw
        .iter()
        .map(|(u, v, w)| (ids[u.as_str()], ids[v.as_str()], *w))
        .collect();
    let n = order.len();
    let (graph, self_loops_dropped, duplicates_dropped) = Graph::build(n, order, edges, weighted)?;
    if self_loops_dropped > 0 {
        log::warn!("dropped {self_loops_dropped} self-loop(s)");
    }
    if graph.edge_count() == 0 {
        return Err(XmError::EmptyGraph);
    }
    Ok(LoadReport {
        graph,
        self_loops_dropped,
        duplicates_dropped,
    })
}

/// Parse an edge list from a string.
pub fn parse_edge_list(text: &str, weighted: bool) -> Result<Graph> {
    load_edge_list(text.as_bytes(), weighted).map(|r| r.graph)
}

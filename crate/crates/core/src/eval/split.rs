use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, XmError};
use crate::graph::Graph;

const RESAMPLE_ATTEMPTS: u64 = 100;

/// Train/test partition of positive edges with matched negatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkSplit {
    #[serde(skip)]
    pub train_graph: Option<Graph>,
    pub train_pos: Vec<(usize, usize)>,
    pub train_neg: Vec<(usize, usize)>,
    pub test_pos: Vec<(usize, usize)>,
    pub test_neg: Vec<(usize, usize)>,
    pub seed: u64,
    pub train_fraction: f64,
    /// Resampling attempts used to avoid isolated training nodes.
    pub attempts: u64,
    /// Set when resampling failed and test edges were moved into training to
    /// cover isolated nodes.
    pub repaired: bool,
}

impl LinkSplit {
    pub fn train_graph(&self) -> &Graph {
        self.train_graph.as_ref().expect("split built by make_split")
    }
}

/// Uniform edge split: `round(fraction · |E|)` training positives, the rest
/// test, each side paired with as many sampled non-edges.
pub fn make_split(g: &Graph, train_fraction: f64, seed: u64) -> Result<LinkSplit> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(XmError::Config(format!(
            "train fraction must lie strictly between 0 and 1, got {train_fraction}"
        )));
    }
    let n = g.node_count();
    let m = g.edge_count();
    let pairs = n * n.saturating_sub(1) / 2;
    if pairs - m < m {
        return Err(XmError::InvalidGraph(format!(
            "graph too dense for negative sampling: {m} edges but only {} non-edges",
            pairs - m
        )));
    }
    if m < 2 {
        return Err(XmError::InvalidGraph("need at least two edges to split".into()));
    }
    let n_train = ((train_fraction * m as f64).round() as usize).clamp(1, m - 1);
    let edges: Vec<(usize, usize)> = g.edges().iter().map(|&(u, v, _)| (u, v)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut attempts = 0;
    let mut order: Vec<usize> = (0..m).collect();
    let (mut train_pos, mut test_pos) = loop {
        attempts += 1;
        order.shuffle(&mut rng);
        let mut train: Vec<_> = order[..n_train].iter().map(|&i| edges[i]).collect();
        let test: Vec<_> = order[n_train..].iter().map(|&i| edges[i]).collect();
        train.sort_unstable();
        if isolated(n, &train).is_empty() || attempts >= RESAMPLE_ATTEMPTS {
            break (train, test);
        }
    };

    let mut repaired = false;
    for v in isolated(n, &train_pos) {
        if let Some(k) = test_pos.iter().position(|&(a, b)| a == v || b == v) {
            train_pos.push(test_pos.remove(k));
            repaired = true;
        }
    }
    train_pos.sort_unstable();
    test_pos.sort_unstable();

    let negatives = sample_non_edges(g, train_pos.len() + test_pos.len(), &mut rng);
    let (train_neg, test_neg) = negatives.split_at(train_pos.len());
    let train_graph = g.with_edges(&train_pos)?;
    Ok(LinkSplit {
        train_graph: Some(train_graph),
        train_pos,
        train_neg: train_neg.to_vec(),
        test_pos,
        test_neg: test_neg.to_vec(),
        seed,
        train_fraction,
        attempts,
        repaired,
    })
}

fn isolated(n: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let mut seen = vec![false; n];
    for &(u, v) in edges {
        seen[u] = true;
        seen[v] = true;
    }
    (0..n).filter(|&v| !seen[v]).collect()
}

/// `count` distinct non-edges `(u, v)` with `u < v`, uniformly at random.
fn sample_non_edges<R: Rng>(g: &Graph, count: usize, rng: &mut R) -> Vec<(usize, usize)> {
    let n = g.node_count();
    let available = n * (n - 1) / 2 - g.edge_count();
    if available <= 4 * count {
        let mut all: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
            .filter(|&(u, v)| !g.has_edge(u, v))
            .collect();
        let (picked, _) = all.partial_shuffle(rng, count);
        return picked.to_vec();
    }
    let mut seen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u == v {
            continue;
        }
        let pair = (u.min(v), u.max(v));
        if !g.has_edge(pair.0, pair.1) && seen.insert(pair) {
            out.push(pair);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{complete, karate};

    #[test]
    fn karate_split_sizes() {
        let s = make_split(&karate(), 0.6, 1).unwrap();
        assert!(s.train_pos.len() == 46 || s.train_pos.len() == 47);
        assert_eq!(s.train_pos.len() + s.test_pos.len(), 78);
        assert_eq!(s.train_neg.len(), s.train_pos.len());
        assert_eq!(s.test_neg.len(), s.test_pos.len());
    }

    #[test]
    fn split_is_reproducible() {
        let a = make_split(&karate(), 0.6, 9).unwrap();
        let b = make_split(&karate(), 0.6, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.train_graph().edges(), b.train_graph().edges());
    }

    #[test]
    fn no_leakage_and_valid_negatives() {
        let g = karate();
        let s = make_split(&g, 0.6, 4).unwrap();
        let tg = s.train_graph();
        assert!(s.test_pos.iter().all(|&(u, v)| !tg.has_edge(u, v)));
        assert!(s.train_neg.iter().chain(&s.test_neg).all(|&(u, v)| !g.has_edge(u, v)));
        let negs: HashSet<_> = s.train_neg.iter().chain(&s.test_neg).collect();
        assert_eq!(negs.len(), s.train_neg.len() + s.test_neg.len());
        assert!((0..34).all(|v| tg.degree(v) > 0));
    }

    #[test]
    fn dense_graph_rejected() {
        assert!(make_split(&complete(5).unwrap(), 0.6, 0).is_err());
        assert!(make_split(&karate(), 1.0, 0).is_err());
    }
}

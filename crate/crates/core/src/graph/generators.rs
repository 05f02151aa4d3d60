use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Graph;
use crate::error::{Result, XmError};

const KARATE: &str = include_str!("../../data/karate.txt");

/// Zachary's karate club: 34 nodes, 78 edges, 0-indexed.
pub fn karate() -> Graph {
    super::parse_edge_list(KARATE, false).expect("bundled karate edge list is valid")
}

/// Two `clique_size` cliques joined by `path_len` intermediate nodes.
///
/// Nodes `0..m` form the first clique, then the path nodes, then the second
/// clique. The bridge attaches to node `m - 1` and node `m + path_len`.
/// `path_len == 0` joins the cliques with a single edge.
pub fn barbell(clique_size: usize, path_len: usize) -> Result<Graph> {
    if clique_size < 3 {
        return Err(XmError::Config(format!(
            "barbell clique size must be at least 3, got {clique_size}"
        )));
    }
    let m = clique_size;
    let n = 2 * m + path_len;
    let mut edges = Vec::new();
    for offset in [0, m + path_len] {
        for i in 0..m {
            for j in (i + 1)..m {
                edges.push((offset + i, offset + j));
            }
        }
    }
    let chain: Vec<usize> = std::iter::once(m - 1)
        .chain(m..m + path_len)
        .chain(std::iter::once(m + path_len))
        .collect();
    for w in chain.windows(2) {
        edges.push((w[0], w[1]));
    }
    Graph::from_pairs(n, edges)
}

pub fn complete(n: usize) -> Result<Graph> {
    let edges = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j)));
    Graph::from_pairs(n, edges)
}

pub fn path(n: usize) -> Result<Graph> {
    Graph::from_pairs(n, (1..n).map(|i| (i - 1, i)))
}

pub fn cycle(n: usize) -> Result<Graph> {
    if n < 3 {
        return Err(XmError::Config("cycle needs at least 3 nodes".into()));
    }
    Graph::from_pairs(n, (0..n).map(|i| (i, (i + 1) % n)))
}

/// Star with node 0 at the center and `leaves` pendant nodes.
pub fn star(leaves: usize) -> Result<Graph> {
    Graph::from_pairs(leaves + 1, (1..=leaves).map(|i| (0, i)))
}

pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(XmError::Config(format!("edge probability {p} not in [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    Graph::from_pairs(n, edges)
}

/// Planted-partition model: `blocks` near-equal communities, each pair
/// inside a community linked with probability `p_in`, across communities
/// with `p_out`.
pub fn planted_partition(
    n: usize,
    blocks: usize,
    p_in: f64,
    p_out: f64,
    seed: u64,
) -> Result<Graph> {
    if blocks == 0 || blocks > n {
        return Err(XmError::Config(format!(
            "need 1..={n} blocks, got {blocks}"
        )));
    }
    for p in [p_in, p_out] {
        if !(0.0..=1.0).contains(&p) {
            return Err(XmError::Config(format!("edge probability {p} not in [0, 1]")));
        }
    }
    let block_of = |v: usize| v * blocks / n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let p = if block_of(i) == block_of(j) { p_in } else { p_out };
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    Graph::from_pairs(n, edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn karate_shape() {
        let g = karate();
        assert_eq!(g.node_count(), 34);
        assert_eq!(g.edge_count(), 78);
        assert_eq!(g.degree(33), 17);
        assert_eq!(g.degree(0), 16);
        assert!(g.is_connected());
    }

    #[test]
    fn barbell_counts() {
        let g = barbell(3, 0).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (6, 7));
        let g = barbell(4, 2).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (10, 15));
        assert!(g.is_connected());
    }

    #[test]
    fn barbell_bridge_degrees() {
        let g = barbell(5, 0).unwrap();
        for v in 0..10 {
            let expect = if v == 4 || v == 5 { 5 } else { 4 };
            assert_eq!(g.degree(v), expect, "node {v}");
        }
    }

    #[test]
    fn barbell_rejects_small_cliques() {
        assert!(matches!(barbell(2, 1), Err(XmError::Config(_))));
    }

    #[test]
    fn planted_partition_is_seeded() {
        let a = planted_partition(200, 4, 0.3, 0.01, 7).unwrap();
        let b = planted_partition(200, 4, 0.3, 0.01, 7).unwrap();
        assert_eq!(a, b);
        let c = planted_partition(200, 4, 0.3, 0.01, 8).unwrap();
        assert_ne!(a, c);
    }
}

//! Neighborhood-level features: clustering, ego nets, Burt constraint,
//! neighbor averages, and BFS-based eccentricity.

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::graph::{local_clustering, triangles_per_node, Graph};

pub const UNREACHABLE: usize = usize::MAX;

/// Hop distances from `source`; unreachable nodes get [`UNREACHABLE`].
pub fn bfs_distances(g: &Graph, source: usize) -> Vec<usize> {
    let mut dist = vec![UNREACHABLE; g.node_count()];
    let mut queue = VecDeque::new();
    dist[source] = 0;
    queue.push_back(source);
    while let Some(u) = queue.pop_front() {
        for w in g.neighbor_ids(u) {
            if dist[w] == UNREACHABLE {
                dist[w] = dist[u] + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Largest hop distance from each node within its own connected component.
/// Isolated nodes have eccentricity 0.
pub fn eccentricity(g: &Graph) -> Vec<f64> {
    (0..g.node_count())
        .into_par_iter()
        .map(|v| {
            bfs_distances(g, v)
                .into_iter()
                .filter(|&d| d != UNREACHABLE)
                .max()
                .unwrap_or(0) as f64
        })
        .collect()
}

pub fn clustering(g: &Graph) -> Vec<f64> {
    local_clustering(g)
}

/// Edges among `{v} ∪ N(v)`: the spokes plus the triangles through `v`.
pub fn ego_net_edges(g: &Graph) -> Vec<f64> {
    triangles_per_node(g)
        .into_iter()
        .enumerate()
        .map(|(v, t)| (g.degree(v) + t) as f64)
        .collect()
}

/// Mean degree of the neighbors; 0 for isolated nodes.
pub fn avg_neighbor_degree(g: &Graph) -> Vec<f64> {
    neighbor_mean(g, &g.degrees().iter().map(|&d| d as f64).collect::<Vec<_>>())
}

/// Mean clustering coefficient of the neighbors; 0 for isolated nodes.
pub fn avg_neighbor_clustering(g: &Graph) -> Vec<f64> {
    neighbor_mean(g, &local_clustering(g))
}

fn neighbor_mean(g: &Graph, values: &[f64]) -> Vec<f64> {
    (0..g.node_count())
        .map(|v| {
            let k = g.degree(v);
            if k == 0 {
                0.0
            } else {
                g.neighbor_ids(v).map(|u| values[u]).sum::<f64>() / k as f64
            }
        })
        .collect()
}

/// Burt's structural-hole constraint
/// `c_i = Σ_j (p_ij + Σ_q p_iq p_qj)^2` over neighbors `j` and `q ≠ j` of `i`,
/// with `p_ij = w_ij / Σ_k w_ik`. Isolated nodes get 0; their ids are
/// returned alongside.
pub fn burt_constraint(g: &Graph) -> (Vec<f64>, Vec<usize>) {
    let n = g.node_count();
    let strength: Vec<f64> = (0..n).map(|v| g.weighted_degree(v)).collect();
    let p = |a: usize, b: usize| -> f64 {
        g.edge_weight(a, b).map_or(0.0, |w| w / strength[a])
    };
    let mut isolated = Vec::new();
    let values = (0..n)
        .map(|i| {
            if g.degree(i) == 0 {
                isolated.push(i);
                return 0.0;
            }
            g.neighbor_ids(i)
                .map(|j| {
                    let indirect: f64 = g
                        .neighbor_ids(i)
                        .filter(|&q| q != j)
                        .map(|q| p(i, q) * p(q, j))
                        .sum();
                    (p(i, j) + indirect).powi(2)
                })
                .sum()
        })
        .collect();
    (values, isolated)
}

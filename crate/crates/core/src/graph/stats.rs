use serde::{Deserialize, Serialize};

use super::Graph;

/// Summary statistics in the style of a dataset table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub node_count: usize,
    pub edge_count: usize,
    pub mean_degree: f64,
    pub degree_std: f64,
    pub degree_assortativity: f64,
    pub mean_clustering: f64,
    pub transitivity: f64,
    /// Set when assortativity or clustering are undefined (single node,
    /// no edges, or all degrees equal) and were reported as 0.
    pub degenerate: bool,
}

/// Number of triangles through each node (topology only).
pub fn triangles_per_node(g: &Graph) -> Vec<usize> {
    let mut tri = vec![0usize; g.node_count()];
    for &(u, v, _) in g.edges() {
        let common = sorted_intersection(g.neighbors(u), g.neighbors(v));
        tri[u] += common;
        tri[v] += common;
    }
    // each triangle at u is seen from both of its edges incident to u
    tri.iter().map(|t| t / 2).collect()
}

fn sorted_intersection(a: &[(usize, f64)], b: &[(usize, f64)]) -> usize {
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

/// Local clustering coefficient; nodes with degree < 2 get 0.
pub fn local_clustering(g: &Graph) -> Vec<f64> {
    triangles_per_node(g)
        .into_iter()
        .enumerate()
        .map(|(v, t)| {
            let k = g.degree(v);
            if k < 2 {
                0.0
            } else {
                2.0 * t as f64 / (k * (k - 1)) as f64
            }
        })
        .collect()
}

pub fn graph_stats(g: &Graph) -> GraphStats {
    let n = g.node_count();
    let m = g.edge_count();
    let deg: Vec<f64> = g.degrees().into_iter().map(|d| d as f64).collect();
    let mean_degree = 2.0 * m as f64 / n as f64;
    let degree_std =
        (deg.iter().map(|d| (d - mean_degree).powi(2)).sum::<f64>() / n as f64).sqrt();

    let mut degenerate = n < 2 || m == 0;

    // Pearson correlation of degrees over both orientations of every edge.
    let degree_assortativity = if m == 0 {
        0.0
    } else {
        let (mut sx, mut sxx, mut sxy) = (0.0, 0.0, 0.0);
        for &(u, v, _) in g.edges() {
            let (a, b) = (deg[u], deg[v]);
            sx += a + b;
            sxx += a * a + b * b;
            sxy += 2.0 * a * b;
        }
        let cnt = 2.0 * m as f64;
        let mean = sx / cnt;
        let var = sxx / cnt - mean * mean;
        let cov = sxy / cnt - mean * mean;
        if var <= 1e-12 * mean.max(1.0).powi(2) {
            degenerate = true;
            0.0
        } else {
            (cov / var).clamp(-1.0, 1.0)
        }
    };

    let tri = triangles_per_node(g);
    let clustering = local_clustering(g);
    let mean_clustering = clustering.iter().sum::<f64>() / n as f64;
    let triangles: usize = tri.iter().sum::<usize>() / 3;
    let wedges: usize = g
        .degrees()
        .iter()
        .map(|&k| k * k.saturating_sub(1) / 2)
        .sum();
    let transitivity = if wedges == 0 {
        0.0
    } else {
        3.0 * triangles as f64 / wedges as f64
    };

    GraphStats {
        node_count: n,
        edge_count: m,
        mean_degree,
        degree_std,
        degree_assortativity,
        mean_clustering,
        transitivity,
        degenerate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{complete, karate, star};

    #[test]
    fn clique_is_fully_clustered() {
        let s = graph_stats(&complete(5).unwrap());
        assert_eq!(s.mean_clustering, 1.0);
        assert_eq!(s.transitivity, 1.0);
        // all degrees equal: assortativity undefined
        assert!(s.degenerate);
    }

    #[test]
    fn karate_mean_degree() {
        let s = graph_stats(&karate());
        assert!((s.mean_degree - 156.0 / 34.0).abs() < 1e-12);
        assert!((s.mean_degree - 4.588).abs() < 1e-3);
        assert!(s.degree_assortativity < 0.0);
        assert!(!s.degenerate);
    }

    #[test]
    fn star_is_disassortative() {
        let s = graph_stats(&star(5).unwrap());
        assert!((s.degree_assortativity + 1.0).abs() < 1e-12);
        assert_eq!(s.transitivity, 0.0);
    }

    #[test]
    fn single_node_is_degenerate() {
        let g = Graph::from_pairs(1, []).unwrap();
        let s = graph_stats(&g);
        assert!(s.degenerate);
        assert_eq!(s.mean_clustering, 0.0);
        assert_eq!(s.degree_assortativity, 0.0);
    }
}

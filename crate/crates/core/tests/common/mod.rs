//! Brute-force reference implementations shared by the integration tests.

#![allow(dead_code)]

use xm_core::graph::{barbell, complete, cycle, erdos_renyi, path, star, Graph};

pub fn suite() -> Vec<Graph> {
    let mut graphs = vec![
        path(2).unwrap(),
        path(7).unwrap(),
        cycle(5).unwrap(),
        cycle(12).unwrap(),
        star(6).unwrap(),
        complete(4).unwrap(),
        complete(9).unwrap(),
        barbell(4, 2).unwrap(),
        barbell(5, 0).unwrap(),
    ];
    let mut seed = 0;
    while graphs.len() < 220 {
        let n = 3 + (seed % 10) as usize;
        let p = 0.2 + 0.07 * (seed % 9) as f64;
        let g = erdos_renyi(n, p, seed).unwrap();
        if g.is_connected() {
            graphs.push(g);
        }
        seed += 1;
    }
    graphs
}

pub fn adjacency(g: &Graph) -> Vec<Vec<f64>> {
    let n = g.node_count();
    let mut a = vec![vec![0.0; n]; n];
    for &(u, v, _) in g.edges() {
        a[u][v] = 1.0;
        a[v][u] = 1.0;
    }
    a
}

/// Gaussian elimination with partial pivoting.
pub fn solve(mut m: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())).unwrap();
        m.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let factor = m[r][col] / m[col][col];
            for c in col..n {
                m[r][c] -= factor * m[col][c];
            }
            b[r] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| m[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / m[r][r];
    }
    x
}

pub fn all_pairs_hops(g: &Graph) -> Vec<Vec<usize>> {
    let n = g.node_count();
    let inf = usize::MAX / 4;
    let mut d = vec![vec![inf; n]; n];
    for (v, row) in d.iter_mut().enumerate() {
        row[v] = 0;
    }
    for &(u, v, _) in g.edges() {
        d[u][v] = 1;
        d[v][u] = 1;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

/// Walks every shortest path from `at` to `t`, counting how many pass
/// through each node.
fn enumerate_paths(g: &Graph, d: &[Vec<usize>], at: usize, t: usize, stack: &mut Vec<usize>, through: &mut [u64], total: &mut u64) {
    if at == t {
        *total += 1;
        for &v in &stack[1..] {
            through[v] += 1;
        }
        return;
    }
    for w in g.neighbor_ids(at) {
        if d[w][t] + 1 == d[at][t] {
            stack.push(at);
            enumerate_paths(g, d, w, t, stack, through, total);
            stack.pop();
        }
    }
}

pub fn betweenness_by_enumeration(g: &Graph) -> Vec<f64> {
    let n = g.node_count();
    let d = all_pairs_hops(g);
    let mut b = vec![0.0; n];
    for s in 0..n {
        for t in s + 1..n {
            let mut through = vec![0u64; n];
            let mut total = 0;
            enumerate_paths(g, &d, s, t, &mut Vec::new(), &mut through, &mut total);
            for v in 0..n {
                if v != s && v != t {
                    b[v] += through[v] as f64 / total as f64;
                }
            }
        }
    }
    b
}

pub fn closed_triples(g: &Graph) -> (Vec<f64>, f64, f64) {
    let n = g.node_count();
    let mut local = vec![0.0; n];
    let (mut closed, mut triples) = (0.0, 0.0);
    for v in 0..n {
        let nb: Vec<usize> = g.neighbor_ids(v).collect();
        let k = nb.len() as f64;
        let mut links = 0.0;
        for (i, &a) in nb.iter().enumerate() {
            for &b in &nb[i + 1..] {
                if g.has_edge(a, b) {
                    links += 1.0;
                }
            }
        }
        if k >= 2.0 {
            local[v] = links / (k * (k - 1.0) / 2.0);
        }
        closed += links;
        triples += k * (k - 1.0) / 2.0;
    }
    (local, closed, triples)
}

/// Katz scores from `(I - αA) x = 1`, L2-normalized.
pub fn katz_dense(g: &Graph, alpha: f64) -> Vec<f64> {
    let n = g.node_count();
    let a = adjacency(g);
    let m: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| f64::from(i == j) - alpha * a[i][j]).collect())
        .collect();
    let x = solve(m, vec![1.0; n]);
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    x.into_iter().map(|v| v / norm).collect()
}

/// Stationary vector of the walk with restart at `s`:
/// `(I - d Pᵀ) p = (1 - d) e_s` with P row-stochastic.
pub fn ppr_dense(g: &Graph, s: usize, damping: f64) -> Vec<f64> {
    let n = g.node_count();
    let a = adjacency(g);
    let deg: Vec<f64> = a.iter().map(|r| r.iter().sum()).collect();
    let m: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| f64::from(i == j) - damping * a[j][i] / deg[j]).collect())
        .collect();
    let mut rhs = vec![0.0; n];
    rhs[s] = 1.0 - damping;
    solve(m, rhs)
}

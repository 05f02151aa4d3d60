//! Walk- and path-based centralities.

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::error::{Result, XmError};
use crate::graph::Graph;

pub const MAX_ITERATIONS: usize = 10_000;

/// Personalized PageRank vector of one seed node.
#[derive(Debug, Clone)]
pub struct Ppr {
    pub scores: Vec<f64>,
    /// Seed node has no neighbors; all mass stays on it.
    pub degenerate: bool,
    pub iterations: usize,
}

/// Random walk with restart at `seed`:
/// `p ← (1 - damping) e_seed + damping Pᵀ p`, iterated until the largest
/// entry change drops below `tol`.
pub fn personalized_pagerank(g: &Graph, seed: usize, damping: f64, tol: f64) -> Result<Ppr> {
    let n = g.node_count();
    if seed >= n {
        return Err(XmError::Config(format!("seed node {seed} out of range")));
    }
    if !(damping > 0.0 && damping < 1.0) {
        return Err(XmError::Config(format!("damping {damping} not in (0, 1)")));
    }
    if !(tol > 0.0) {
        return Err(XmError::Config("tolerance must be positive".into()));
    }
    let mut scores = vec![0.0; n];
    scores[seed] = 1.0;
    if g.degree(seed) == 0 {
        return Ok(Ppr {
            scores,
            degenerate: true,
            iterations: 0,
        });
    }
    let strength: Vec<f64> = (0..n).map(|v| g.weighted_degree(v)).collect();
    let mut next = vec![0.0; n];
    for it in 1..=MAX_ITERATIONS {
        next.iter_mut().for_each(|x| *x = 0.0);
        for (u, &pu) in scores.iter().enumerate() {
            if pu == 0.0 {
                continue;
            }
            let share = damping * pu / strength[u];
            for &(w, wt) in g.neighbors(u) {
                next[w] += share * wt;
            }
        }
        next[seed] += 1.0 - damping;
        let delta = scores
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut scores, &mut next);
        if delta < tol {
            return Ok(Ppr {
                scores,
                degenerate: false,
                iterations: it,
            });
        }
    }
    Err(XmError::Numerical(format!(
        "personalized PageRank from node {seed} did not converge"
    )))
}

/// Global PageRank with uniform teleportation.
pub fn pagerank(g: &Graph, damping: f64, tol: f64) -> Result<Vec<f64>> {
    let n = g.node_count();
    let strength: Vec<f64> = (0..n).map(|v| g.weighted_degree(v)).collect();
    let mut scores = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    for _ in 0..MAX_ITERATIONS {
        // isolated nodes spread their mass uniformly
        let dangling: f64 = (0..n).filter(|&v| strength[v] == 0.0).map(|v| scores[v]).sum();
        let base = (1.0 - damping) / n as f64 + damping * dangling / n as f64;
        next.iter_mut().for_each(|x| *x = base);
        for (u, &pu) in scores.iter().enumerate() {
            if strength[u] == 0.0 {
                continue;
            }
            let share = damping * pu / strength[u];
            for &(w, wt) in g.neighbors(u) {
                next[w] += share * wt;
            }
        }
        let delta = scores
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut scores, &mut next);
        if delta < tol {
            return Ok(scores);
        }
    }
    Err(XmError::Numerical("PageRank did not converge".into()))
}

fn adjacency_product(g: &Graph, x: &[f64], out: &mut [f64]) {
    for (u, o) in out.iter_mut().enumerate() {
        *o = g.neighbors(u).iter().map(|&(w, wt)| wt * x[w]).sum();
    }
}

/// Estimate of the largest adjacency eigenvalue from `steps` rounds of power
/// iteration on `A + I` (the shift keeps bipartite graphs from oscillating).
pub fn spectral_radius_estimate(g: &Graph, steps: usize) -> f64 {
    let n = g.node_count();
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut ax = vec![0.0; n];
    let mut lambda = 0.0;
    for _ in 0..steps {
        adjacency_product(g, &x, &mut ax);
        let shifted: Vec<f64> = ax.iter().zip(&x).map(|(a, b)| a + b).collect();
        // Rayleigh quotient of A+I at x (x has unit norm)
        lambda = shifted.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() - 1.0;
        let norm = shifted.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        x = shifted.into_iter().map(|v| v / norm).collect();
    }
    lambda.max(0.0)
}

/// `0.85 / λ_max`, with λ_max from 200 power-iteration steps.
pub fn default_katz_alpha(g: &Graph) -> f64 {
    let lambda = spectral_radius_estimate(g, 200);
    if lambda <= 0.0 {
        0.1
    } else {
        0.85 / lambda
    }
}

/// Katz centrality: fixed point of `x = αAx + β1`, iterated until the largest
/// change is below 1e-10, then L2-normalized.
pub fn katz_centrality(g: &Graph, alpha: f64, beta: f64) -> Result<Vec<f64>> {
    if !(alpha > 0.0 && alpha.is_finite()) || !(beta > 0.0 && beta.is_finite()) {
        return Err(XmError::Config(format!(
            "Katz alpha and beta must be positive, got {alpha}, {beta}"
        )));
    }
    let n = g.node_count();
    let mut x = vec![beta; n];
    let mut ax = vec![0.0; n];
    let mut prev_delta = f64::INFINITY;
    let mut growing = 0;
    for _ in 0..MAX_ITERATIONS {
        adjacency_product(g, &x, &mut ax);
        let mut delta: f64 = 0.0;
        for (xi, &a) in x.iter_mut().zip(&ax) {
            let next = alpha * a + beta;
            delta = delta.max((next - *xi).abs());
            *xi = next;
        }
        if !delta.is_finite() || x.iter().any(|v| v.abs() > 1e150) {
            return Err(XmError::KatzDivergence);
        }
        if delta < 1e-10 {
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            return Ok(x.into_iter().map(|v| v / norm).collect());
        }
        // a contracting iteration shrinks the update geometrically
        if delta >= prev_delta {
            growing += 1;
            if growing > 50 {
                return Err(XmError::KatzDivergence);
            }
        } else {
            growing = 0;
        }
        prev_delta = delta;
    }
    Err(XmError::KatzDivergence)
}

/// Dominant eigenvector of the adjacency matrix, L2-normalized and
/// non-negative.
pub fn eigenvector_centrality(g: &Graph) -> Result<Vec<f64>> {
    let n = g.node_count();
    if g.edge_count() == 0 {
        return Ok(vec![1.0 / (n as f64).sqrt(); n]);
    }
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut ax = vec![0.0; n];
    for _ in 0..MAX_ITERATIONS {
        adjacency_product(g, &x, &mut ax);
        let shifted: Vec<f64> = ax.iter().zip(&x).map(|(a, b)| a + b).collect();
        let norm = shifted.iter().map(|v| v * v).sum::<f64>().sqrt();
        let next: Vec<f64> = shifted.into_iter().map(|v| v / norm).collect();
        let delta = next
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        x = next;
        if delta < 1e-12 {
            return Ok(x);
        }
    }
    Err(XmError::Numerical("eigenvector centrality did not converge".into()))
}

/// Sources handled per parallel job; fixed so the reduction order (and thus
/// the floating-point result) does not depend on the worker count.
const BETWEENNESS_CHUNK: usize = 32;

/// Unnormalized shortest-path betweenness over unordered node pairs
/// (hop distances), by Brandes' dependency accumulation.
pub fn betweenness(g: &Graph) -> Vec<f64> {
    let n = g.node_count();
    let sources: Vec<usize> = (0..n).collect();
    let partials: Vec<Vec<f64>> = sources
        .par_chunks(BETWEENNESS_CHUNK)
        .map(|chunk| {
            let mut acc = vec![0.0; n];
            for &s in chunk {
                brandes_single_source(g, s, &mut acc);
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; n];
    for part in partials {
        for (t, p) in total.iter_mut().zip(part) {
            *t += p;
        }
    }
    // each unordered pair is accumulated from both endpoints
    total.iter().map(|b| b / 2.0).collect()
}

fn brandes_single_source(g: &Graph, s: usize, acc: &mut [f64]) {
    let n = g.node_count();
    let mut sigma = vec![0.0f64; n];
    let mut dist = vec![usize::MAX; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::new();
    sigma[s] = 1.0;
    dist[s] = 0;
    queue.push_back(s);
    while let Some(v) = queue.pop_front() {
        order.push(v);
        for w in g.neighbor_ids(v) {
            if dist[w] == usize::MAX {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
            if dist[w] == dist[v] + 1 {
                sigma[w] += sigma[v];
            }
        }
    }
    let mut delta = vec![0.0f64; n];
    for &w in order.iter().rev() {
        for v in g.neighbor_ids(w) {
            if dist[v] != usize::MAX && dist[v] + 1 == dist[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
        }
        if w != s {
            acc[w] += delta[w];
        }
    }
}

//! LINE: edge-sampling skip-gram with negative sampling.
//!
//! Each step draws an edge with probability proportional to its weight
//! (alias table), orients it at random, and takes one SGD step on
//! `log σ(y_u·c_v) + Σ_k log σ(−y_u·c_{n_k})` with `K` negatives drawn from
//! `degree^0.75`. First order uses the vertex vectors as contexts; second
//! order keeps a separate context table. With XM enabled, the source vertex
//! is then moved by `−ρ ∇ xm_loss(y_u, f_u)`.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_rows, config_hash, xm_features, AliasTable, EmbeddingMatrix, Method};
use crate::error::{Result, XmError};
use crate::features::FeatureMatrix;
use crate::graph::Graph;
use crate::xm::{add_xm_gradient, XmConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LineOrder {
    First,
    Second,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LineConfig {
    pub order: LineOrder,
    pub dim: usize,
    pub epochs: usize,
    /// Edge samples per epoch; `None` means `100 · |E|`.
    pub samples_per_epoch: Option<usize>,
    pub negatives: usize,
    pub initial_lr: f64,
    /// Learning rate decays linearly from `initial_lr` to
    /// `initial_lr * final_lr_fraction` over the whole run.
    pub final_lr_fraction: f64,
    pub noise_exponent: f64,
    pub xm: Option<XmConfig>,
    pub seed: u64,
    /// More than one worker shards each epoch's samples and averages the
    /// per-worker tables; results then depend on the worker count.
    pub workers: usize,
}

impl Default for LineConfig {
    fn default() -> Self {
        Self {
            order: LineOrder::First,
            dim: 128,
            epochs: 10,
            samples_per_epoch: None,
            negatives: 5,
            initial_lr: 0.025,
            final_lr_fraction: 0.1,
            noise_exponent: 0.75,
            xm: None,
            seed: 0,
            workers: 1,
        }
    }
}

impl LineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(XmError::Config(format!("LINE: {m}")));
        if self.dim == 0 {
            return bad("dim must be at least 1");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.negatives == 0 {
            return bad("need at least one negative sample");
        }
        if !(self.initial_lr > 0.0 && self.initial_lr.is_finite()) {
            return bad("initial learning rate must be positive");
        }
        if !(0.0..=1.0).contains(&self.final_lr_fraction) {
            return bad("final_lr_fraction must lie in [0, 1]");
        }
        if !self.noise_exponent.is_finite() {
            return bad("noise exponent must be finite");
        }
        if self.samples_per_epoch == Some(0) {
            return bad("samples_per_epoch must be positive");
        }
        if self.workers == 0 {
            return bad("workers must be at least 1");
        }
        if let Some(xm) = &self.xm {
            xm.validate()?;
        }
        Ok(())
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `-ln σ(x)`, computed stably.
fn neg_log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

#[derive(Clone)]
struct Tables {
    vertex: Vec<f64>,
    context: Vec<f64>,
}

struct Sampler<'a> {
    edges: &'a [(usize, usize, f64)],
    edge_table: AliasTable,
    noise_table: AliasTable,
}

struct Trainer<'a> {
    cfg: &'a LineConfig,
    features: Option<&'a FeatureMatrix>,
    sampler: &'a Sampler<'a>,
    total_samples: f64,
}

impl Trainer<'_> {
    fn lr_at(&self, t: usize) -> f64 {
        let progress = (t as f64 / self.total_samples).min(1.0);
        self.cfg.initial_lr * (1.0 - (1.0 - self.cfg.final_lr_fraction) * progress)
    }

    /// Run `count` SGD steps starting at global step `start`; returns the
    /// summed sample loss.
    fn run<R: Rng>(&self, tables: &mut Tables, rng: &mut R, start: usize, count: usize) -> Result<f64> {
        let d = self.cfg.dim;
        let mut src_vec = vec![0.0; d];
        let mut err = vec![0.0; d];
        let mut grad = vec![0.0; d];
        let mut loss = 0.0;
        for step in 0..count {
            let lr = self.lr_at(start + step);
            let (a, b, _) = self.sampler.edges[self.sampler.edge_table.sample(rng)];
            let (src, dst) = if rng.random::<bool>() { (a, b) } else { (b, a) };
            src_vec.copy_from_slice(&tables.vertex[src * d..(src + 1) * d]);
            err.iter_mut().for_each(|e| *e = 0.0);

            for k in 0..=self.cfg.negatives {
                let (target, label) = if k == 0 {
                    (dst, 1.0)
                } else {
                    let t = self.sampler.noise_table.sample(rng);
                    if t == src {
                        continue;
                    }
                    (t, 0.0)
                };
                let ctx = match self.cfg.order {
                    LineOrder::First => &mut tables.vertex[target * d..(target + 1) * d],
                    LineOrder::Second => &mut tables.context[target * d..(target + 1) * d],
                };
                let x: f64 = src_vec.iter().zip(ctx.iter()).map(|(u, c)| u * c).sum();
                loss += if label > 0.0 { neg_log_sigmoid(x) } else { neg_log_sigmoid(-x) };
                let g = (label - sigmoid(x)) * lr;
                for i in 0..d {
                    err[i] += g * ctx[i];
                    ctx[i] += g * src_vec[i];
                }
            }
            let y = &mut tables.vertex[src * d..(src + 1) * d];
            for i in 0..d {
                y[i] += err[i];
            }

            if let (Some(xm), Some(f)) = (&self.cfg.xm, self.features) {
                grad.iter_mut().for_each(|g| *g = 0.0);
                let yv = ndarray::ArrayView1::from(&*y);
                add_xm_gradient(yv, f.row(src), xm, 1.0, &mut grad)
                    .map_err(|_| XmError::Collapse { node: src })?;
                for i in 0..d {
                    y[i] -= lr * grad[i];
                }
            }
        }
        Ok(loss)
    }
}

/// Unnormalized negative-sampling weights, `degree^exponent` per node.
pub fn noise_weights(g: &Graph, exponent: f64) -> Vec<f64> {
    (0..g.node_count()).map(|v| g.weighted_degree(v).powf(exponent)).collect()
}

/// Train LINE embeddings on `g`. `features` must be the normalized sense
/// features when `cfg.xm` is set.
pub fn line_train(g: &Graph, cfg: &LineConfig, features: Option<&FeatureMatrix>) -> Result<EmbeddingMatrix> {
    cfg.validate()?;
    let n = g.node_count();
    if let Some(v) = (0..n).find(|&v| g.degree(v) == 0) {
        return Err(XmError::InvalidGraph(format!(
            "LINE needs every node to have an edge; node {v} is isolated"
        )));
    }
    let features = xm_features(&cfg.xm, features, n)?;
    let d = cfg.dim;

    let edge_weights: Vec<f64> = g.edges().iter().map(|e| e.2).collect();
    let noise = noise_weights(g, cfg.noise_exponent);
    let sampler = Sampler {
        edges: g.edges(),
        edge_table: AliasTable::new(&edge_weights)?,
        noise_table: AliasTable::new(&noise)?,
    };
    let per_epoch = cfg.samples_per_epoch.unwrap_or(100 * g.edge_count());
    let trainer = Trainer {
        cfg,
        features,
        sampler: &sampler,
        total_samples: (per_epoch * cfg.epochs) as f64,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let bound = 0.5 / d as f64;
    let mut tables = Tables {
        vertex: (0..n * d).map(|_| rng.random_range(-bound..bound)).collect(),
        context: match cfg.order {
            LineOrder::First => Vec::new(),
            LineOrder::Second => vec![0.0; n * d],
        },
    };

    let mut loss_history = Vec::with_capacity(cfg.epochs);
    let mut epoch_seconds = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let started = Instant::now();
        let start = epoch * per_epoch;
        let loss = if cfg.workers == 1 {
            trainer.run(&mut tables, &mut rng, start, per_epoch)?
        } else {
            run_sharded(&trainer, &mut tables, epoch, start, per_epoch)?
        };
        let mean = loss / per_epoch as f64;
        if !mean.is_finite() {
            return Err(XmError::Divergence { epoch });
        }
        loss_history.push(mean);
        epoch_seconds.push(started.elapsed().as_secs_f64());
    }

    let values = ndarray::Array2::from_shape_vec((n, d), tables.vertex).expect("n x d table");
    check_rows(&values)?;
    Ok(EmbeddingMatrix {
        values,
        method: match cfg.order {
            LineOrder::First => Method::Line1,
            LineOrder::Second => Method::Line2,
        },
        xm_enabled: cfg.xm.is_some(),
        xm: cfg.xm,
        seed: cfg.seed,
        epochs: cfg.epochs,
        config_hash: config_hash(cfg),
        loss_history,
        epoch_seconds,
    })
}

fn run_sharded(trainer: &Trainer<'_>, tables: &mut Tables, epoch: usize, start: usize, count: usize) -> Result<f64> {
    let workers = trainer.cfg.workers;
    let results: Vec<Result<(Tables, f64)>> = (0..workers)
        .into_par_iter()
        .map(|w| {
            let mut local = tables.clone();
            let stream = trainer.cfg.seed ^ ((epoch as u64 + 1) << 32) ^ (w as u64 + 1);
            let mut rng = ChaCha8Rng::seed_from_u64(stream);
            let lo = count * w / workers;
            let hi = count * (w + 1) / workers;
            let loss = trainer.run(&mut local, &mut rng, start + lo, hi - lo)?;
            Ok((local, loss))
        })
        .collect();
    let mut total = 0.0;
    let scale = 1.0 / workers as f64;
    tables.vertex.iter_mut().for_each(|x| *x = 0.0);
    tables.context.iter_mut().for_each(|x| *x = 0.0);
    for r in results {
        let (local, loss) = r?;
        total += loss;
        for (a, b) in tables.vertex.iter_mut().zip(&local.vertex) {
            *a += scale * b;
        }
        for (a, b) in tables.context.iter_mut().zip(&local.context) {
            *a += scale * b;
        }
    }
    Ok(total)
}

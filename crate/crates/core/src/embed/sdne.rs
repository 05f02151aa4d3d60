//! SDNE: a sigmoid autoencoder over adjacency rows with a first-order
//! (edge smoothness) term on the code layer.
//!
//! Training is full batch with Adam. Parameters live in one flat vector so
//! that gradients can be checked against finite differences directly.

use std::time::Instant;

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_rows, config_hash, xm_features, EmbeddingMatrix, Method};
use crate::error::{Result, XmError};
use crate::features::FeatureMatrix;
use crate::graph::Graph;
use crate::xm::{add_xm_gradient, xm_loss_closed_form, XmConfig};

/// Activation of the code (embedding) layer. Hidden layers are sigmoid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CodeActivation {
    #[default]
    Sigmoid,
    /// `ln(1 + eᶻ)`: positive like the sigmoid but not bounded above.
    Softplus,
}

impl CodeActivation {
    fn apply(self, z: f64) -> f64 {
        match self {
            CodeActivation::Sigmoid => sigmoid(z),
            CodeActivation::Softplus => {
                if z > 30.0 {
                    z + (-z).exp()
                } else {
                    z.exp().ln_1p()
                }
            }
        }
    }

    /// Derivative expressed through the output `a`.
    fn slope(self, a: f64) -> f64 {
        match self {
            CodeActivation::Sigmoid => a * (1.0 - a),
            CodeActivation::Softplus => -(-a).exp_m1(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SdneConfig {
    pub dim: usize,
    /// Encoder hidden widths; the decoder mirrors them.
    pub hidden: Vec<usize>,
    pub code_activation: CodeActivation,
    pub epochs: usize,
    pub learning_rate: f64,
    /// First-order weight.
    pub alpha: f64,
    /// Reconstruction weight.
    pub beta_recon: f64,
    /// Weight decay on all weight matrices.
    pub nu: f64,
    /// Extra reconstruction weight on nonzero adjacency entries.
    pub beta_pen: f64,
    pub xm: Option<XmConfig>,
    /// Fraction of the epochs over which the XM weights ramp linearly from
    /// zero to their full value. Early full-strength penalties can saturate
    /// the code layer before the autoencoder has learned any structure.
    pub xm_warmup: f64,
    pub seed: u64,
}

impl Default for SdneConfig {
    fn default() -> Self {
        Self {
            dim: 128,
            hidden: vec![256],
            code_activation: CodeActivation::Sigmoid,
            epochs: 200,
            learning_rate: 0.01,
            alpha: 0.1,
            beta_recon: 1.0,
            nu: 1e-4,
            beta_pen: 5.0,
            xm: None,
            xm_warmup: 0.0,
            seed: 0,
        }
    }
}

impl SdneConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(XmError::Config(format!("SDNE: {m}")));
        if self.dim == 0 || self.hidden.contains(&0) {
            return bad("layer widths must be at least 1".into());
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be positive".into());
        }
        for (name, v) in [("alpha", self.alpha), ("beta_recon", self.beta_recon), ("nu", self.nu)] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        if !(self.beta_pen > 1.0 && self.beta_pen.is_finite()) {
            return bad(format!("beta_pen must exceed 1, got {}", self.beta_pen));
        }
        if !(0.0..=1.0).contains(&self.xm_warmup) {
            return bad(format!("xm_warmup must lie in [0, 1], got {}", self.xm_warmup));
        }
        if let Some(xm) = &self.xm {
            xm.validate()?;
        }
        Ok(())
    }
}

/// Loss components at the current parameters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SdneLoss {
    pub first_order: f64,
    pub reconstruction: f64,
    pub regularization: f64,
    pub xm: f64,
    pub total: f64,
}

#[derive(Debug, Clone)]
struct LayerShape {
    inputs: usize,
    outputs: usize,
    w_offset: usize,
    b_offset: usize,
}

struct Pass {
    loss: SdneLoss,
    gradient: Vec<f64>,
    code_gradient: Array2<f64>,
}

/// Autoencoder state: flat parameters, the training graph in dense form, and
/// Adam moments.
#[derive(Debug, Clone)]
pub struct SdneModel {
    cfg: SdneConfig,
    layers: Vec<LayerShape>,
    params: Vec<f64>,
    x: Array2<f64>,
    /// Nonzeros of `x` per row, for the input layer products.
    rows: Vec<Vec<(usize, f64)>>,
    edges: Vec<(usize, usize, f64)>,
    features: Option<Array2<f64>>,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
    xm_scale: f64,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl SdneModel {
    pub fn new(g: &Graph, cfg: &SdneConfig, features: Option<&FeatureMatrix>) -> Result<Self> {
        cfg.validate()?;
        let n = g.node_count();
        if let Some(v) = (0..n).find(|&v| g.degree(v) == 0) {
            return Err(XmError::InvalidGraph(format!(
                "SDNE needs every node to have an edge; node {v} is isolated"
            )));
        }
        let features = xm_features(&cfg.xm, features, n)?.map(|f| f.values.clone());

        let mut widths = vec![n];
        widths.extend(&cfg.hidden);
        widths.push(cfg.dim);
        widths.extend(cfg.hidden.iter().rev());
        widths.push(n);

        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut layers = Vec::new();
        let mut params = Vec::new();
        for pair in widths.windows(2) {
            let (inputs, outputs) = (pair[0], pair[1]);
            let bound = 1.0 / (inputs as f64).sqrt();
            let w_offset = params.len();
            params.extend((0..inputs * outputs).map(|_| rng.random_range(-bound..bound)));
            let b_offset = params.len();
            params.extend(std::iter::repeat_n(0.0, outputs));
            layers.push(LayerShape {
                inputs,
                outputs,
                w_offset,
                b_offset,
            });
        }

        let mut x = Array2::zeros((n, n));
        for &(u, v, w) in g.edges() {
            x[[u, v]] = w;
            x[[v, u]] = w;
        }
        let count = params.len();
        Ok(Self {
            cfg: cfg.clone(),
            layers,
            params,
            x,
            rows: (0..n).map(|v| g.neighbors(v).to_vec()).collect(),
            edges: g.edges().to_vec(),
            features,
            m: vec![0.0; count],
            v: vec![0.0; count],
            t: 0,
            xm_scale: 1.0,
        })
    }

    pub fn parameter_count(&self) -> usize {
        self.params.len()
    }

    pub fn parameters(&self) -> &[f64] {
        &self.params
    }

    pub fn set_parameters(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.params.len(), "parameter vector length");
        self.params.copy_from_slice(p);
    }

    fn weights(&self, k: usize) -> ArrayView2<'_, f64> {
        let l = &self.layers[k];
        ArrayView2::from_shape((l.inputs, l.outputs), &self.params[l.w_offset..l.w_offset + l.inputs * l.outputs])
            .expect("layer shape")
    }

    fn bias(&self, k: usize) -> ArrayView1<'_, f64> {
        let l = &self.layers[k];
        ArrayView1::from(&self.params[l.b_offset..l.b_offset + l.outputs])
    }

    fn code_layer(&self) -> usize {
        self.cfg.hidden.len() + 1
    }

    /// Activations of every layer; index 0 is the input.
    /// `X · m` using the sparse rows of the adjacency matrix (`X` is
    /// symmetric, so this is also `Xᵀ · m`).
    fn sparse_dot(&self, m: ArrayView2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros((self.rows.len(), m.ncols()));
        for (mut o, row) in out.rows_mut().into_iter().zip(&self.rows) {
            for &(j, x) in row {
                o.scaled_add(x, &m.row(j));
            }
        }
        out
    }

    fn layer(&self, k: usize, input: Option<&Array2<f64>>) -> Array2<f64> {
        let mut z = match input {
            None => self.sparse_dot(self.weights(k)),
            Some(a) => a.dot(&self.weights(k)),
        };
        z += &self.bias(k);
        let act = self.activation(k);
        z.mapv_inplace(|v| act.apply(v));
        z
    }

    fn activation(&self, k: usize) -> CodeActivation {
        if k + 1 == self.code_layer() {
            self.cfg.code_activation
        } else {
            CodeActivation::Sigmoid
        }
    }

    /// Outputs of every layer; entry `k` is the output of layer `k`.
    fn forward(&self) -> Vec<Array2<f64>> {
        let mut acts: Vec<Array2<f64>> = Vec::with_capacity(self.layers.len());
        for k in 0..self.layers.len() {
            let a = self.layer(k, acts.last());
            acts.push(a);
        }
        acts
    }

    /// Code-layer embedding at the current parameters.
    pub fn embedding(&self) -> Array2<f64> {
        let mut a = self.layer(0, None);
        for k in 1..self.code_layer() {
            a = self.layer(k, Some(&a));
        }
        a
    }

    fn pass(&self) -> Result<Pass> {
        let cfg = &self.cfg;
        let acts = self.forward();
        let code = self.code_layer();
        let y = &acts[code - 1];
        let mut loss = SdneLoss::default();
        let mut gradient = vec![0.0; self.params.len()];

        // reconstruction
        let out = acts.last().expect("output layer");
        let mut da = Array2::zeros(out.raw_dim());
        for ((d, &xh), &x) in da.iter_mut().zip(out.iter()).zip(self.x.iter()) {
            let b = if x != 0.0 { cfg.beta_pen } else { 1.0 };
            let r = (xh - x) * b;
            loss.reconstruction += r * r;
            *d = 2.0 * cfg.beta_recon * r * b;
        }
        loss.reconstruction *= cfg.beta_recon;

        let mut code_gradient = None;
        for k in (0..self.layers.len()).rev() {
            let a = &acts[k];
            let act = self.activation(k);
            let dz = &da * &a.mapv(|s| act.slope(s));
            let l = &self.layers[k];
            let w = self.weights(k);
            let dw = if k == 0 { self.sparse_dot(dz.view()) } else { acts[k - 1].t().dot(&dz) };
            let gw = &mut gradient[l.w_offset..l.w_offset + l.inputs * l.outputs];
            for ((g, &d), &wv) in gw.iter_mut().zip(dw.iter()).zip(w.iter()) {
                *g = d + 2.0 * cfg.nu * wv;
            }
            loss.regularization += cfg.nu * w.iter().map(|v| v * v).sum::<f64>();
            let db = dz.sum_axis(Axis(0));
            gradient[l.b_offset..l.b_offset + l.outputs].copy_from_slice(db.as_slice().expect("contiguous"));
            if k == 0 {
                break;
            }
            da = dz.dot(&w.t());
            if k == code {
                self.add_code_terms(y, &mut da, &mut loss)?;
                code_gradient = Some(da.clone());
            }
        }
        loss.total = loss.first_order + loss.reconstruction + loss.regularization + loss.xm;
        Ok(Pass {
            loss,
            gradient,
            code_gradient: code_gradient.expect("code layer is interior"),
        })
    }

    /// First-order and XM terms, which act directly on the code layer.
    fn add_code_terms(&self, y: &Array2<f64>, dy: &mut Array2<f64>, loss: &mut SdneLoss) -> Result<()> {
        let alpha = self.cfg.alpha;
        if alpha != 0.0 {
            for &(i, j, w) in &self.edges {
                let diff = &y.row(i) - &y.row(j);
                loss.first_order += alpha * w * diff.dot(&diff);
                let g = diff * (2.0 * alpha * w);
                let mut ri = dy.row_mut(i);
                ri += &g;
                let mut rj = dy.row_mut(j);
                rj -= &g;
            }
        }
        if let (Some(xm), Some(f)) = (&self.cfg.xm, &self.features) {
            for (k, mut row) in dy.rows_mut().into_iter().enumerate() {
                let yk = y.row(k);
                loss.xm += self.xm_scale
                    * xm_loss_closed_form(yk, f.row(k), xm).map_err(|_| XmError::Collapse { node: k })?;
                let out = row.as_slice_mut().expect("row-major");
                add_xm_gradient(yk, f.row(k), xm, self.xm_scale, out).map_err(|_| XmError::Collapse { node: k })?;
            }
        }
        Ok(())
    }

    /// Multiplier on the XM weights (1 by default); used for warm-up.
    pub fn set_xm_scale(&mut self, scale: f64) {
        self.xm_scale = scale;
    }

    pub fn loss(&self) -> Result<SdneLoss> {
        Ok(self.pass()?.loss)
    }

    /// Loss and its gradient with respect to [`Self::parameters`].
    pub fn loss_and_gradient(&self) -> Result<(SdneLoss, Vec<f64>)> {
        let p = self.pass()?;
        Ok((p.loss, p.gradient))
    }

    /// Gradient of the total loss with respect to the code-layer outputs.
    pub fn code_gradient(&self) -> Result<Array2<f64>> {
        Ok(self.pass()?.code_gradient)
    }

    /// One full-batch Adam step; returns the loss before the step.
    pub fn step(&mut self) -> Result<SdneLoss> {
        const B1: f64 = 0.9;
        const B2: f64 = 0.999;
        const EPS: f64 = 1e-8;
        let (loss, grad) = self.loss_and_gradient()?;
        self.t += 1;
        let c1 = 1.0 - B1.powi(self.t);
        let c2 = 1.0 - B2.powi(self.t);
        let lr = self.cfg.learning_rate;
        for i in 0..self.params.len() {
            let g = grad[i];
            self.m[i] = B1 * self.m[i] + (1.0 - B1) * g;
            self.v[i] = B2 * self.v[i] + (1.0 - B2) * g * g;
            self.params[i] -= lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + EPS);
        }
        Ok(loss)
    }
}

/// Train SDNE embeddings on `g`. `features` must be the normalized sense
/// features when `cfg.xm` is set.
pub fn sdne_train(g: &Graph, cfg: &SdneConfig, features: Option<&FeatureMatrix>) -> Result<EmbeddingMatrix> {
    let mut model = SdneModel::new(g, cfg, features)?;
    let mut loss_history = Vec::with_capacity(cfg.epochs);
    let mut epoch_seconds = Vec::with_capacity(cfg.epochs);
    let warmup = (cfg.xm_warmup * cfg.epochs as f64).round();
    for epoch in 0..cfg.epochs {
        let started = Instant::now();
        if warmup > 0.0 {
            model.set_xm_scale(((epoch + 1) as f64 / warmup).min(1.0));
        }
        let loss = model.step()?;
        if !loss.total.is_finite() || model.params.iter().any(|p| !p.is_finite()) {
            return Err(XmError::Divergence { epoch });
        }
        loss_history.push(loss.total);
        epoch_seconds.push(started.elapsed().as_secs_f64());
    }
    let values = model.embedding();
    check_rows(&values)?;
    Ok(EmbeddingMatrix {
        values,
        method: Method::Sdne,
        xm_enabled: cfg.xm.is_some(),
        xm: cfg.xm,
        seed: cfg.seed,
        epochs: cfg.epochs,
        config_hash: config_hash(cfg),
        loss_history,
        epoch_seconds,
    })
}

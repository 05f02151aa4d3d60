use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, XmError};

/// How two node embeddings become one edge feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Combiner {
    /// `[y_min(u,v), y_max(u,v)]`.
    #[default]
    Concat,
    Hadamard,
    Average,
}

impl std::str::FromStr for Combiner {
    type Err = XmError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "concat" => Ok(Self::Concat),
            "hadamard" => Ok(Self::Hadamard),
            "average" => Ok(Self::Average),
            other => Err(XmError::Config(format!(
                "unknown combiner '{other}' (concat | hadamard | average)"
            ))),
        }
    }
}

pub fn edge_features(emb: ArrayView2<f64>, u: usize, v: usize, combiner: Combiner) -> Array1<f64> {
    let (a, b) = (emb.row(u.min(v)), emb.row(u.max(v)));
    match combiner {
        Combiner::Concat => a.iter().chain(b.iter()).copied().collect(),
        Combiner::Hadamard => &a * &b,
        Combiner::Average => (&a + &b) * 0.5,
    }
}

/// Feature matrix for a list of node pairs.
pub fn edge_feature_matrix(emb: ArrayView2<f64>, pairs: &[(usize, usize)], combiner: Combiner) -> Array2<f64> {
    let width = match combiner {
        Combiner::Concat => 2 * emb.ncols(),
        _ => emb.ncols(),
    };
    let mut out = Array2::zeros((pairs.len(), width));
    for (mut row, &(u, v)) in out.rows_mut().into_iter().zip(pairs) {
        row.assign(&edge_features(emb, u, v, combiner));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            hidden: 64,
            epochs: 300,
            learning_rate: 0.01,
            seed: 0,
        }
    }
}

/// Input → ReLU hidden layer → logit, trained full batch with Adam on the
/// mean logistic loss. Inputs are standardized with training statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkClassifier {
    mean: Array1<f64>,
    scale: Array1<f64>,
    w1: Array2<f64>,
    b1: Array1<f64>,
    w2: Array1<f64>,
    b2: f64,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
    lr: f64,
}

impl Adam {
    fn new(n: usize, lr: f64) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            lr,
        }
    }

    fn step<'a>(&mut self, params: impl Iterator<Item = (&'a mut f64, f64)>) {
        self.t += 1;
        let c1 = 1.0 - 0.9f64.powi(self.t);
        let c2 = 1.0 - 0.999f64.powi(self.t);
        for (i, (p, g)) in params.enumerate() {
            self.m[i] = 0.9 * self.m[i] + 0.1 * g;
            self.v[i] = 0.999 * self.v[i] + 0.001 * g * g;
            *p -= self.lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + 1e-8);
        }
    }
}

impl LinkClassifier {
    pub fn train(x: ArrayView2<f64>, labels: &[bool], cfg: &ClassifierConfig) -> Result<Self> {
        if x.nrows() != labels.len() {
            return Err(XmError::Config("one label per example required".into()));
        }
        let pos = labels.iter().filter(|&&l| l).count();
        if pos < 2 || labels.len() - pos < 2 {
            return Err(XmError::Config(
                "classifier needs at least two examples of each class".into(),
            ));
        }
        if cfg.hidden == 0 || cfg.epochs == 0 || !(cfg.learning_rate > 0.0) {
            return Err(XmError::Config("invalid classifier configuration".into()));
        }
        let (rows, p) = x.dim();
        let mean = x.mean_axis(Axis(0)).expect("non-empty");
        let scale = x.std_axis(Axis(0), 0.0).mapv(|s| if s > 1e-12 { s } else { 1.0 });
        let xs = (&x - &mean) / &scale;

        let h = cfg.hidden;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let b1_bound = 1.0 / (p as f64).sqrt();
        let b2_bound = 1.0 / (h as f64).sqrt();
        let mut model = Self {
            mean,
            scale,
            w1: Array2::from_shape_fn((p, h), |_| rng.random_range(-b1_bound..b1_bound)),
            b1: Array1::zeros(h),
            w2: Array1::from_shape_fn(h, |_| rng.random_range(-b2_bound..b2_bound)),
            b2: 0.0,
        };
        let y = Array1::from_iter(labels.iter().map(|&l| if l { 1.0 } else { 0.0 }));
        let mut adam = Adam::new(p * h + 2 * h + 1, cfg.learning_rate);
        let inv = 1.0 / rows as f64;
        for _ in 0..cfg.epochs {
            let mut hidden = xs.dot(&model.w1);
            hidden += &model.b1;
            hidden.mapv_inplace(|z| z.max(0.0));
            let logits = hidden.dot(&model.w2) + model.b2;
            // d(mean logistic loss)/d logit = σ(z) − y
            let dlogit = (logits.mapv(sigmoid) - &y) * inv;
            let gw2 = hidden.t().dot(&dlogit);
            let gb2 = dlogit.sum();
            let mut dh = Array2::from_shape_fn((rows, h), |(i, j)| dlogit[i] * model.w2[j]);
            dh.zip_mut_with(&hidden, |d, &a| {
                if a <= 0.0 {
                    *d = 0.0
                }
            });
            let gw1 = xs.t().dot(&dh);
            let gb1 = dh.sum_axis(Axis(0));
            let grads = gw1.iter().chain(&gb1).chain(&gw2).copied().chain(std::iter::once(gb2));
            let params = model
                .w1
                .iter_mut()
                .chain(model.b1.iter_mut())
                .chain(model.w2.iter_mut())
                .chain(std::iter::once(&mut model.b2));
            adam.step(params.zip(grads));
        }
        Ok(model)
    }

    /// Logits for each row of `x`.
    pub fn decision(&self, x: ArrayView2<f64>) -> Array1<f64> {
        let xs = (&x - &self.mean) / &self.scale;
        let mut hidden = xs.dot(&self.w1);
        hidden += &self.b1;
        hidden.mapv_inplace(|z| z.max(0.0));
        hidden.dot(&self.w2) + self.b2
    }

    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Array1<f64> {
        self.decision(x).mapv(sigmoid)
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Area under the ROC curve by the Mann–Whitney statistic with midranks.
pub fn auc(scores: ArrayView1<f64>, labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(XmError::Config("one label per score required".into()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(XmError::Numerical("NaN score".into()));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(XmError::Config("AUC needs both classes".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1 share their average
        let mid = (i + j + 2) as f64 / 2.0;
        rank_sum += mid * order[i..=j].iter().filter(|&&k| labels[k]).count() as f64;
        i = j + 1;
    }
    let (p, n) = (pos as f64, neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn combiners() {
        let emb = array![[1.0, 2.0], [3.0, 4.0]];
        assert_eq!(edge_features(emb.view(), 0, 1, Combiner::Hadamard), array![3.0, 8.0]);
        assert_eq!(edge_features(emb.view(), 1, 0, Combiner::Concat), array![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(edge_features(emb.view(), 0, 0, Combiner::Average), array![1.0, 2.0]);
        assert_eq!(
            edge_features(emb.view(), 0, 1, Combiner::Concat),
            edge_features(emb.view(), 1, 0, Combiner::Concat)
        );
    }

    #[test]
    fn auc_examples() {
        let l = [false, false, true, true];
        assert_eq!(auc(array![0.1, 0.4, 0.35, 0.8].view(), &l).unwrap(), 0.75);
        assert_eq!(auc(array![0.1, 0.2, 0.3, 0.4].view(), &l).unwrap(), 1.0);
        assert_eq!(auc(array![0.5, 0.5, 0.5, 0.5].view(), &l).unwrap(), 0.5);
        assert!(auc(array![0.1, 0.2].view(), &[true, true]).is_err());
    }

    #[test]
    fn separable_toy_set_is_learned() {
        let x = array![[0.0, 0.1], [0.2, 0.0], [0.1, 0.3], [2.0, 2.1], [2.2, 1.9], [1.8, 2.0]];
        let labels = [false, false, false, true, true, true];
        let cfg = ClassifierConfig {
            epochs: 500,
            ..Default::default()
        };
        let model = LinkClassifier::train(x.view(), &labels, &cfg).unwrap();
        let p = model.predict_proba(x.view());
        for (pi, &l) in p.iter().zip(&labels) {
            assert_eq!(*pi > 0.5, l);
        }
        let again = LinkClassifier::train(x.view(), &labels, &cfg).unwrap();
        assert_eq!(model, again);
    }

    #[test]
    fn single_class_rejected() {
        let x = array![[0.0], [1.0], [2.0]];
        assert!(LinkClassifier::train(x.view(), &[true, true, true], &ClassifierConfig::default()).is_err());
    }
}

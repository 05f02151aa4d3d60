//! Link prediction, Explain-norm statistics and the XM ablation.

mod classifier;
mod split;
mod stats;

pub use classifier::{auc, edge_feature_matrix, edge_features, ClassifierConfig, Combiner, LinkClassifier};
pub use split::{make_split, LinkSplit};
pub use stats::{welch_t, MeanSe};

use std::io::Write;

use ndarray::ArrayView2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::{EmbeddingMatrix, MethodConfig};
use crate::error::{Result, XmError};
use crate::explain::{explain_batch, nuclear_norm, normalize_explain, NormalizationMode, View};
use crate::features::{normalize_features, structural_features, FeatureMatrix, FeatureSet};
use crate::graph::Graph;
use crate::xm::XmConfig;

/// Independent seed for job `stream` of a run seeded with `seed`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed.wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-node nuclear norms of normalized Explain matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormDistribution {
    pub norms: Vec<f64>,
    pub stats: MeanSe,
    pub mode: NormalizationMode,
    /// Cells (population) or matrices (per-matrix) that were constant.
    pub constant: usize,
    pub degenerate: bool,
}

pub fn norm_distribution(
    emb: ArrayView2<f64>,
    features: &FeatureMatrix,
    mode: NormalizationMode,
) -> Result<NormDistribution> {
    let mut batch = explain_batch(emb, features.values.view())?;
    let summary = normalize_explain(&mut batch, mode)?;
    let norms: Vec<f64> = batch
        .par_iter()
        .map(|e| e.view(View::Normalized).map(nuclear_norm))
        .collect::<Result<_>>()?;
    Ok(NormDistribution {
        stats: MeanSe::of(&norms),
        norms,
        mode,
        constant: summary.constant,
        degenerate: summary.degenerate,
    })
}

fn mean_epoch_seconds(emb: &EmbeddingMatrix) -> f64 {
    let t = &emb.epoch_seconds;
    t.iter().sum::<f64>() / t.len().max(1) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinkPredOptions {
    pub folds: usize,
    pub train_fraction: f64,
    pub combiner: Combiner,
    pub classifier: ClassifierConfig,
    /// Sense features used for XM training and for the norm statistics.
    pub features: FeatureSet,
    pub mode: NormalizationMode,
}

impl Default for LinkPredOptions {
    fn default() -> Self {
        Self {
            folds: 3,
            train_fraction: 0.6,
            combiner: Combiner::Concat,
            classifier: ClassifierConfig::default(),
            features: FeatureSet::default(),
            mode: NormalizationMode::Population,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub seed: u64,
    pub auc: f64,
    pub norm: MeanSe,
    pub train_edges: usize,
    pub test_edges: usize,
    pub split_repaired: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seconds_per_epoch: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    pub method: String,
    pub xm: Option<XmConfig>,
    pub folds: Vec<FoldResult>,
    pub auc: MeanSe,
    pub norm: MeanSe,
    /// Welch p-value of this run's per-fold norms against a baseline run.
    pub p_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seconds_per_epoch: Option<MeanSe>,
    pub config: MethodConfig,
    pub options: LinkPredOptions,
    pub seed: u64,
    pub graph_hash: String,
}

impl EvalReport {
    /// Copy with wall-clock fields removed, for byte-stable outputs.
    pub fn without_timings(&self) -> Self {
        let mut out = self.clone();
        out.seconds_per_epoch = None;
        out.folds.iter_mut().for_each(|f| f.seconds_per_epoch = None);
        out
    }

    pub fn fold_norm_means(&self) -> Vec<f64> {
        self.folds.iter().map(|f| f.norm.mean).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub const CSV_HEADER: [&'static str; 11] = [
        "dataset",
        "method",
        "xm",
        "gamma",
        "delta",
        "auc_mean",
        "auc_se",
        "norm_mean",
        "norm_se",
        "p_value",
        "seconds_per_epoch",
    ];

    pub fn csv_record(&self) -> Vec<String> {
        let (g, d) = self.xm.map_or((0.0, 0.0), |x| (x.gamma, x.delta));
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        vec![
            self.dataset.clone(),
            self.method.clone(),
            self.xm.is_some().to_string(),
            g.to_string(),
            d.to_string(),
            self.auc.mean.to_string(),
            self.auc.se.to_string(),
            self.norm.mean.to_string(),
            self.norm.se.to_string(),
            opt(self.p_value),
            opt(self.seconds_per_epoch.map(|s| s.mean)),
        ]
    }

    pub fn write_csv<W: Write>(reports: &[EvalReport], out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::CSV_HEADER)?;
        for r in reports {
            w.write_record(r.csv_record())?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Repeated resampled link-prediction evaluation of one embedder.
pub fn run_link_prediction(g: &Graph, method: &MethodConfig, opts: &LinkPredOptions, seed: u64) -> Result<EvalReport> {
    if opts.folds < 2 {
        return Err(XmError::Config(format!("need at least 2 folds, got {}", opts.folds)));
    }
    method.validate()?;
    let folds: Vec<(FoldResult, f64)> = (0..opts.folds)
        .into_par_iter()
        .map(|fold| {
            run_fold(g, method, opts, fold, derive_seed(seed, fold as u64)).map_err(|e| XmError::Fold {
                fold,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    let aucs: Vec<f64> = folds.iter().map(|(f, _)| f.auc).collect();
    let norms: Vec<f64> = folds.iter().map(|(f, _)| f.norm.mean).collect();
    let secs: Vec<f64> = folds.iter().map(|(_, s)| *s).collect();
    Ok(EvalReport {
        dataset: String::new(),
        method: method.name().to_string(),
        xm: method.xm(),
        folds: folds.into_iter().map(|(f, _)| f).collect(),
        auc: MeanSe::of(&aucs),
        norm: MeanSe::of(&norms),
        p_value: None,
        seconds_per_epoch: Some(MeanSe::of(&secs)),
        config: method.clone(),
        options: opts.clone(),
        seed,
        graph_hash: g.content_hash(),
    })
}

fn run_fold(
    g: &Graph,
    method: &MethodConfig,
    opts: &LinkPredOptions,
    fold: usize,
    seed: u64,
) -> Result<(FoldResult, f64)> {
    let split = make_split(g, opts.train_fraction, seed)?;
    let train = split.train_graph();
    if split.test_pos.iter().any(|&(u, v)| train.has_edge(u, v)) {
        return Err(XmError::Numerical("test edge leaked into the training graph".into()));
    }
    let features = normalize_features(&structural_features(train, &opts.features)?);
    let emb = method.with_seed(seed).train(train, Some(&features))?;
    let norms = norm_distribution(emb.values.view(), &features, opts.mode)?;

    let mut train_pairs = split.train_pos.clone();
    train_pairs.extend(&split.train_neg);
    let train_labels: Vec<bool> = (0..train_pairs.len()).map(|i| i < split.train_pos.len()).collect();
    let mut test_pairs = split.test_pos.clone();
    test_pairs.extend(&split.test_neg);
    let test_labels: Vec<bool> = (0..test_pairs.len()).map(|i| i < split.test_pos.len()).collect();

    let x_train = edge_feature_matrix(emb.values.view(), &train_pairs, opts.combiner);
    let x_test = edge_feature_matrix(emb.values.view(), &test_pairs, opts.combiner);
    let clf_cfg = ClassifierConfig {
        seed,
        ..opts.classifier.clone()
    };
    let clf = LinkClassifier::train(x_train.view(), &train_labels, &clf_cfg)?;
    let scores = clf.decision(x_test.view());
    let auc = auc(scores.view(), &test_labels)?;
    let secs = mean_epoch_seconds(&emb);
    Ok((
        FoldResult {
            fold,
            seed,
            auc,
            norm: norms.stats,
            train_edges: split.train_pos.len(),
            test_edges: split.test_pos.len(),
            split_repaired: split.repaired,
            seconds_per_epoch: Some(secs),
        },
        secs,
    ))
}

/// Welch p-value comparing per-fold mean norms of two reports.
pub fn norm_p_value(base: &EvalReport, other: &EvalReport) -> Result<f64> {
    welch_t(&base.fold_norm_means(), &other.fold_norm_means())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    /// `none`, `sparsity`, `orthogonality` or `both`.
    pub name: String,
    pub gamma: f64,
    pub delta: f64,
    /// Mean per-node norm for each seed.
    pub per_seed: Vec<f64>,
    pub norm: MeanSe,
    /// Welch p-value against the `none` row.
    pub p_vs_none: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seconds_per_epoch: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub method: MethodConfig,
    pub xm: XmConfig,
    pub seeds: Vec<u64>,
    pub mode: NormalizationMode,
    pub graph_hash: String,
    pub rows: Vec<AblationRow>,
}

impl AblationTable {
    pub fn row(&self, name: &str) -> Option<&AblationRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    pub fn without_timings(&self) -> Self {
        let mut out = self.clone();
        out.rows.iter_mut().for_each(|r| r.seconds_per_epoch = None);
        out
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["config", "gamma", "delta", "norm_mean", "norm_se", "seeds", "p_vs_none"])?;
        for r in &self.rows {
            w.write_record([
                r.name.clone(),
                r.gamma.to_string(),
                r.delta.to_string(),
                r.norm.mean.to_string(),
                r.norm.se.to_string(),
                r.per_seed.len().to_string(),
                r.p_vs_none.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Train `method` with no XM, sparsity only, orthogonality only and both,
/// once per seed, and tabulate mean Explain-matrix norms. `features` must be
/// the normalized sense features of `g`.
pub fn ablation(
    g: &Graph,
    method: &MethodConfig,
    xm: XmConfig,
    seeds: &[u64],
    features: &FeatureMatrix,
    mode: NormalizationMode,
) -> Result<AblationTable> {
    if seeds.len() < 3 {
        return Err(XmError::Config(format!("ablation needs at least 3 seeds, got {}", seeds.len())));
    }
    xm.validate()?;
    let configs = [
        ("none", None),
        ("sparsity", Some(XmConfig { delta: 0.0, ..xm })),
        ("orthogonality", Some(XmConfig { gamma: 0.0, ..xm })),
        ("both", Some(xm)),
    ];
    let jobs: Vec<(usize, u64)> = (0..configs.len())
        .flat_map(|c| seeds.iter().map(move |&s| (c, s)))
        .collect();
    let cells: Vec<(f64, f64)> = jobs
        .par_iter()
        .map(|&(c, seed)| {
            let cfg = method.with_xm(configs[c].1).with_seed(seed);
            let emb = cfg.train(g, Some(features))?;
            let dist = norm_distribution(emb.values.view(), features, mode)?;
            Ok((dist.stats.mean, mean_epoch_seconds(&emb)))
        })
        .collect::<Result<_>>()?;

    let k = seeds.len();
    let none: Vec<f64> = cells[..k].iter().map(|c| c.0).collect();
    let rows = configs
        .iter()
        .enumerate()
        .map(|(c, (name, cfg))| {
            let per_seed: Vec<f64> = cells[c * k..(c + 1) * k].iter().map(|x| x.0).collect();
            let secs = cells[c * k..(c + 1) * k].iter().map(|x| x.1).sum::<f64>() / k as f64;
            let (gamma, delta) = cfg.map_or((0.0, 0.0), |x| (x.gamma, x.delta));
            Ok(AblationRow {
                name: name.to_string(),
                gamma,
                delta,
                norm: MeanSe::of(&per_seed),
                p_vs_none: welch_t(&none, &per_seed)?,
                per_seed,
                seconds_per_epoch: Some(secs),
            })
        })
        .collect::<Result<_>>()?;
    Ok(AblationTable {
        method: method.clone(),
        xm,
        seeds: seeds.to_vec(),
        mode,
        graph_hash: g.content_hash(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::LineConfig;
    use crate::graph::karate;
    use ndarray::Array2;

    #[test]
    fn derived_seeds_differ() {
        let s: Vec<u64> = (0..5).map(|k| derive_seed(42, k)).collect();
        for i in 0..5 {
            for j in (i + 1)..5 {
                assert_ne!(s[i], s[j]);
            }
        }
        assert_eq!(derive_seed(42, 3), s[3]);
    }

    #[test]
    fn identical_nodes_are_degenerate() {
        let emb = Array2::from_elem((5, 3), 0.4);
        let f = FeatureMatrix::new(Array2::from_elem((5, 2), 1.0), vec!["a".into(), "b".into()]).unwrap();
        let d = norm_distribution(emb.view(), &f, NormalizationMode::Population).unwrap();
        assert!(d.degenerate);
        assert_eq!(d.norms.len(), 5);
    }

    #[test]
    fn karate_line_link_prediction() {
        let method = MethodConfig::Line(LineConfig {
            dim: 16,
            epochs: 5,
            ..Default::default()
        });
        let r = run_link_prediction(&karate(), &method, &LinkPredOptions::default(), 7).unwrap();
        assert_eq!(r.folds.len(), 3);
        assert!(r.folds.iter().all(|f| (0.0..=1.0).contains(&f.auc)));
        let again = run_link_prediction(&karate(), &method, &LinkPredOptions::default(), 7).unwrap();
        assert_eq!(r.without_timings(), again.without_timings());
    }

    #[test]
    fn one_fold_rejected() {
        let opts = LinkPredOptions {
            folds: 1,
            ..Default::default()
        };
        let m = MethodConfig::Line(LineConfig::default());
        assert!(run_link_prediction(&karate(), &m, &opts, 0).is_err());
    }
}

//! Per-node Explain matrices and their nuclear norms.
//!
//! For a node with embedding `y ∈ R^d` and sense features `f ∈ R^f` the raw
//! Explain matrix is `y fᵀ / (‖y‖₂ ‖f‖₂)`: row `i` is an embedding dimension,
//! column `j` a sense feature. The raw form is rank one with unit nuclear
//! norm, so comparisons across nodes use a normalized view.

mod entropy;

pub use entropy::{bregman_divergence, pinsker_gap, trace_normalize, von_neumann_entropy};

use std::io::Write;

use ndarray::{Array2, ArrayView1, ArrayView2, Zip};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, XmError};
use crate::features::format_float;
use crate::linalg::symmetric_eigen;

/// How raw matrices are rescaled to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizationMode {
    /// Each cell min-max scaled across all nodes of the batch.
    #[default]
    Population,
    /// Each matrix min-max scaled over its own entries.
    PerMatrix,
}

impl std::str::FromStr for NormalizationMode {
    type Err = XmError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "population" => Ok(Self::Population),
            "per-matrix" | "per_matrix" => Ok(Self::PerMatrix),
            other => Err(XmError::Config(format!(
                "unknown normalization mode '{other}' (population | per-matrix)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExplainMatrix {
    pub node: usize,
    /// `d × f`, exactly `y fᵀ / (‖y‖ ‖f‖)`.
    pub raw: Array2<f64>,
    pub normalized: Option<Array2<f64>>,
    pub mode: Option<NormalizationMode>,
}

/// Which view of an Explain matrix to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum View {
    Raw,
    Normalized,
}

impl ExplainMatrix {
    pub fn dims(&self) -> (usize, usize) {
        self.raw.dim()
    }

    pub fn view(&self, view: View) -> Result<ArrayView2<'_, f64>> {
        match view {
            View::Raw => Ok(self.raw.view()),
            View::Normalized => self
                .normalized
                .as_ref()
                .map(|m| m.view())
                .ok_or_else(|| XmError::Config("Explain matrix has not been normalized".into())),
        }
    }

    /// CSV: one row per embedding dimension, one column per named feature.
    /// Uses the normalized view when present.
    pub fn write_csv<W: Write>(&self, feature_names: &[String], out: W) -> Result<()> {
        let m = self.normalized.as_ref().unwrap_or(&self.raw);
        if feature_names.len() != m.ncols() {
            return Err(XmError::Config(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                m.ncols()
            )));
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(std::iter::once("dimension".to_string()).chain(feature_names.iter().cloned()))?;
        for (i, row) in m.rows().into_iter().enumerate() {
            w.write_record(
                std::iter::once(i.to_string()).chain(row.iter().map(|v| format_float(*v))),
            )?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self, feature_names: &[String]) -> Result<String> {
        let rows = |m: &Array2<f64>| m.rows().into_iter().map(|r| r.to_vec()).collect::<Vec<_>>();
        let file = ExplainFile {
            node: self.node,
            features: feature_names.to_vec(),
            mode: self.mode,
            raw: rows(&self.raw),
            normalized: self.normalized.as_ref().map(rows),
            nuclear_norm_raw: nuclear_norm(self.raw.view()),
            nuclear_norm_normalized: self.normalized.as_ref().map(|m| nuclear_norm(m.view())),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }
}

#[derive(Serialize)]
struct ExplainFile {
    node: usize,
    features: Vec<String>,
    mode: Option<NormalizationMode>,
    raw: Vec<Vec<f64>>,
    normalized: Option<Vec<Vec<f64>>>,
    nuclear_norm_raw: f64,
    nuclear_norm_normalized: Option<f64>,
}

fn l2(v: ArrayView1<f64>) -> f64 {
    v.dot(&v).sqrt()
}

/// Raw Explain matrix of one node.
pub fn explain_matrix(y: ArrayView1<f64>, f: ArrayView1<f64>) -> Result<ExplainMatrix> {
    explain_matrix_for(0, y, f)
}

pub fn explain_matrix_for(node: usize, y: ArrayView1<f64>, f: ArrayView1<f64>) -> Result<ExplainMatrix> {
    let ny = l2(y);
    let nf = l2(f);
    if !(ny > 0.0) {
        return Err(XmError::ZeroVector("embedding vector y"));
    }
    if !(nf > 0.0) {
        return Err(XmError::ZeroVector("sense feature vector f"));
    }
    let u = y.mapv(|v| v / ny);
    let w = f.mapv(|v| v / nf);
    let raw = Array2::from_shape_fn((u.len(), w.len()), |(i, j)| u[i] * w[j]);
    Ok(ExplainMatrix {
        node,
        raw,
        normalized: None,
        mode: None,
    })
}

/// Raw Explain matrices for every node (rows of `embeddings` and `features`).
pub fn explain_batch(embeddings: ArrayView2<f64>, features: ArrayView2<f64>) -> Result<Vec<ExplainMatrix>> {
    if embeddings.nrows() != features.nrows() {
        return Err(XmError::Config(format!(
            "{} embeddings but {} feature rows",
            embeddings.nrows(),
            features.nrows()
        )));
    }
    (0..embeddings.nrows())
        .into_par_iter()
        .map(|k| explain_matrix_for(k, embeddings.row(k), features.row(k)))
        .collect()
}

/// Outcome of a batch normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct NormalizeSummary {
    /// Population mode: cells constant across the batch. Per-matrix mode:
    /// matrices whose entries are all equal.
    pub constant: usize,
    /// Every cell (or every matrix) was constant and filled with 0.5.
    pub degenerate: bool,
}

fn constant_span(min: f64, max: f64) -> bool {
    max - min <= 1e-12 * max.abs().max(min.abs()).max(1e-300)
}

/// Fill in the normalized view of every matrix in `batch`.
pub fn normalize_explain(batch: &mut [ExplainMatrix], mode: NormalizationMode) -> Result<NormalizeSummary> {
    let Some(first) = batch.first() else {
        return Err(XmError::Config("cannot normalize an empty batch".into()));
    };
    let dims = first.dims();
    if batch.iter().any(|e| e.dims() != dims) {
        return Err(XmError::Config("Explain matrices differ in shape".into()));
    }
    match mode {
        NormalizationMode::Population => {
            let mut lo = Array2::from_elem(dims, f64::INFINITY);
            let mut hi = Array2::from_elem(dims, f64::NEG_INFINITY);
            for e in batch.iter() {
                Zip::from(&mut lo).and(&mut hi).and(&e.raw).for_each(|l, h, &x| {
                    *l = l.min(x);
                    *h = h.max(x);
                });
            }
            let constant = Zip::from(&lo).and(&hi).map_collect(|&l, &h| constant_span(l, h));
            let count = constant.iter().filter(|&&c| c).count();
            batch.par_iter_mut().for_each(|e| {
                let mut out = Array2::zeros(dims);
                Zip::from(&mut out)
                    .and(&e.raw)
                    .and(&lo)
                    .and(&hi)
                    .and(&constant)
                    .for_each(|o, &x, &l, &h, &c| {
                        *o = if c { 0.5 } else { ((x - l) / (h - l)).clamp(0.0, 1.0) };
                    });
                e.normalized = Some(out);
                e.mode = Some(mode);
            });
            Ok(NormalizeSummary {
                constant: count,
                degenerate: count == dims.0 * dims.1,
            })
        }
        NormalizationMode::PerMatrix => {
            let flags: Vec<bool> = batch
                .par_iter_mut()
                .map(|e| {
                    let l = e.raw.iter().copied().fold(f64::INFINITY, f64::min);
                    let h = e.raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let c = constant_span(l, h);
                    e.normalized = Some(if c {
                        Array2::from_elem(dims, 0.5)
                    } else {
                        e.raw.mapv(|x| ((x - l) / (h - l)).clamp(0.0, 1.0))
                    });
                    e.mode = Some(mode);
                    c
                })
                .collect();
            let count = flags.iter().filter(|&&c| c).count();
            Ok(NormalizeSummary {
                constant: count,
                degenerate: count == batch.len(),
            })
        }
    }
}

/// Eigenvalues of the Gram matrix below this fraction of the largest are
/// numerical noise: the Gram route squares the condition number, so they
/// correspond to singular values under ~1e-7 of the largest.
const GRAM_RELATIVE_CUTOFF: f64 = 1e-14;
const SINGULAR_ABS_CUTOFF: f64 = 1e-12;

/// Singular values, descending, via the eigenvalues of the smaller Gram
/// matrix (`MᵀM` or `MMᵀ`).
pub fn singular_values(m: ArrayView2<f64>) -> Vec<f64> {
    let (r, c) = m.dim();
    if r == 0 || c == 0 {
        return Vec::new();
    }
    let gram = if c <= r { m.t().dot(&m) } else { m.dot(&m.t()) };
    let eig = symmetric_eigen(gram.view()).expect("Gram matrix of finite entries");
    let top = eig.values.iter().copied().fold(0.0, f64::max);
    eig.values
        .iter()
        .map(|&l| {
            if l <= GRAM_RELATIVE_CUTOFF * top {
                0.0
            } else {
                let s = l.sqrt();
                if s < SINGULAR_ABS_CUTOFF {
                    0.0
                } else {
                    s
                }
            }
        })
        .collect()
}

/// Sum of singular values.
pub fn nuclear_norm(m: ArrayView2<f64>) -> f64 {
    singular_values(m).iter().sum()
}

/// `E Eᵀ` (d × d), symmetrized.
pub fn gram(e: &ExplainMatrix, view: View) -> Result<Array2<f64>> {
    let m = e.view(view)?;
    let g = m.dot(&m.t());
    Ok((&g + &g.t()) * 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array1};

    #[test]
    fn basis_vectors() {
        let e = explain_matrix(array![1.0, 0.0].view(), array![0.0, 1.0].view()).unwrap();
        assert_eq!(e.raw, array![[0.0, 1.0], [0.0, 0.0]]);
    }

    #[test]
    fn scales_by_norm_product() {
        let e = explain_matrix(array![3.0, 4.0].view(), array![1.0, 0.0].view()).unwrap();
        assert!((e.raw[[0, 0]] - 0.6).abs() < 1e-15);
        assert!((e.raw[[1, 0]] - 0.8).abs() < 1e-15);
        assert_eq!(e.raw[[0, 1]], 0.0);
    }

    #[test]
    fn zero_inputs_are_named() {
        let err = explain_matrix(array![0.0, 0.0].view(), array![1.0].view()).unwrap_err();
        assert!(err.to_string().contains("embedding"));
        let err = explain_matrix(array![1.0].view(), array![0.0, 0.0].view()).unwrap_err();
        assert!(err.to_string().contains("feature"));
    }

    #[test]
    fn nuclear_norm_examples() {
        assert_eq!(nuclear_norm(Array2::<f64>::zeros((3, 2)).view()), 0.0);
        assert!((nuclear_norm(Array2::<f64>::eye(3).view()) - 3.0).abs() < 1e-12);
        assert!((nuclear_norm(array![[3.0, 0.0], [0.0, 4.0]].view()) - 7.0).abs() < 1e-12);
        // wide matrices go through M Mᵀ
        assert!((nuclear_norm(array![[3.0, 0.0, 0.0], [0.0, -4.0, 0.0]].view()) - 7.0).abs() < 1e-12);
    }

    #[test]
    fn raw_matrix_has_unit_nuclear_norm() {
        let y = Array1::from_iter((0..16).map(|i| ((i * 7 % 5) as f64) - 2.0));
        let f = Array1::from_iter((0..7).map(|i| 0.1 + i as f64 / 7.0));
        let e = explain_matrix(y.view(), f.view()).unwrap();
        assert!((nuclear_norm(e.raw.view()) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn per_matrix_normalization_is_affine() {
        let mut batch = vec![ExplainMatrix {
            node: 0,
            raw: array![[-0.2, 0.3], [0.8, 0.05]],
            normalized: None,
            mode: None,
        }];
        let s = normalize_explain(&mut batch, NormalizationMode::PerMatrix).unwrap();
        assert_eq!(s.constant, 0);
        let n = batch[0].normalized.as_ref().unwrap();
        assert_eq!(n[[0, 0]], 0.0);
        assert_eq!(n[[1, 0]], 1.0);
        assert!((n[[0, 1]] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn population_mode_identical_inputs() {
        let y = array![0.3, -0.5, 0.2];
        let f = array![0.1, 0.9];
        let a = explain_matrix_for(0, y.view(), f.view()).unwrap();
        let b = explain_matrix_for(1, y.view(), f.view()).unwrap();
        let mut batch = vec![a, b];
        let s = normalize_explain(&mut batch, NormalizationMode::Population).unwrap();
        assert!(s.degenerate);
        assert_eq!(batch[0].normalized, batch[1].normalized);
        assert!(batch[0].normalized.as_ref().unwrap().iter().all(|&x| x == 0.5));
    }

    #[test]
    fn population_mode_spans_unit_interval() {
        let emb = array![[1.0, 0.2], [0.1, 1.0], [0.5, 0.5]];
        let feat = array![[1.0, 0.0, 0.3], [0.2, 1.0, 0.3], [0.6, 0.6, 0.9]];
        let mut batch = explain_batch(emb.view(), feat.view()).unwrap();
        normalize_explain(&mut batch, NormalizationMode::Population).unwrap();
        for i in 0..2 {
            for j in 0..3 {
                let col: Vec<f64> = batch.iter().map(|e| e.normalized.as_ref().unwrap()[[i, j]]).collect();
                assert!(col.iter().any(|&x| x == 0.0));
                assert!(col.iter().any(|&x| x == 1.0));
            }
        }
    }

    #[test]
    fn empty_batch_is_error() {
        assert!(normalize_explain(&mut [], NormalizationMode::Population).is_err());
    }

    #[test]
    fn gram_of_identity_and_raw() {
        let e = ExplainMatrix {
            node: 0,
            raw: Array2::eye(2),
            normalized: None,
            mode: None,
        };
        assert_eq!(gram(&e, View::Raw).unwrap(), Array2::<f64>::eye(2));
        assert!(gram(&e, View::Normalized).is_err());

        let e = explain_matrix(array![1.0, 2.0, -2.0].view(), array![0.5, 0.5].view()).unwrap();
        let g = gram(&e, View::Raw).unwrap();
        let trace: f64 = g.diag().sum();
        assert!((trace - 1.0).abs() < 1e-14);
        let sv = singular_values(g.view());
        assert!(sv[1..].iter().all(|&s| s == 0.0));
    }

    #[test]
    fn csv_layout() {
        let e = explain_matrix(array![3.0, 4.0].view(), array![1.0, 0.0].view()).unwrap();
        let mut out = Vec::new();
        e.write_csv(&["a".into(), "b".into()], &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().next().unwrap(), "dimension,a,b");
        assert_eq!(text.lines().count(), 3);
        assert!(e.write_csv(&["a".into()], Vec::new()).is_err());
    }
}

//! Human-readable "sense" features per node.
//!
//! Structural features describe a node's local topology; positional
//! features (hop distance to anchors, anchor mass in the node's personalized
//! PageRank vector) encode where the node sits in the graph.

pub mod centrality;
pub mod local;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use ndarray::{Array2, ArrayView1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, XmError};
use crate::graph::Graph;

pub use centrality::{
    betweenness, default_katz_alpha, eigenvector_centrality, katz_centrality, pagerank,
    personalized_pagerank, spectral_radius_estimate, Ppr,
};
pub use local::{
    avg_neighbor_clustering, avg_neighbor_degree, bfs_distances, burt_constraint, clustering,
    eccentricity, ego_net_edges,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    Degree,
    WeightedDegree,
    Clustering,
    PprMean,
    PprStd,
    AvgNeighborDegree,
    AvgNeighborClustering,
    EgoNetEdges,
    BurtConstraint,
    Betweenness,
    Eccentricity,
    Pagerank,
    DegreeCentrality,
    Katz,
    EigenvectorCentrality,
}

impl Feature {
    pub const ALL: [Feature; 15] = [
        Feature::Degree,
        Feature::WeightedDegree,
        Feature::Clustering,
        Feature::PprMean,
        Feature::PprStd,
        Feature::AvgNeighborDegree,
        Feature::AvgNeighborClustering,
        Feature::EgoNetEdges,
        Feature::BurtConstraint,
        Feature::Betweenness,
        Feature::Eccentricity,
        Feature::Pagerank,
        Feature::DegreeCentrality,
        Feature::Katz,
        Feature::EigenvectorCentrality,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Feature::Degree => "degree",
            Feature::WeightedDegree => "weighted_degree",
            Feature::Clustering => "clustering",
            Feature::PprMean => "ppr_mean",
            Feature::PprStd => "ppr_std",
            Feature::AvgNeighborDegree => "avg_neighbor_degree",
            Feature::AvgNeighborClustering => "avg_neighbor_clustering",
            Feature::EgoNetEdges => "ego_net_edges",
            Feature::BurtConstraint => "burt_constraint",
            Feature::Betweenness => "betweenness",
            Feature::Eccentricity => "eccentricity",
            Feature::Pagerank => "pagerank",
            Feature::DegreeCentrality => "degree_centrality",
            Feature::Katz => "katz",
            Feature::EigenvectorCentrality => "eigenvector_centrality",
        }
    }

    pub fn valid_names() -> String {
        Feature::ALL.map(Feature::name).join(", ")
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Feature {
    type Err = XmError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        Feature::ALL
            .into_iter()
            .find(|f| f.name() == key)
            .ok_or_else(|| XmError::UnknownFeature {
                name: s.to_string(),
                valid: Feature::valid_names(),
            })
    }
}

/// Non-empty, duplicate-free, ordered selection of features.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Feature>", into = "Vec<Feature>")]
pub struct FeatureSet(Vec<Feature>);

impl FeatureSet {
    pub fn new(features: Vec<Feature>) -> Result<Self> {
        if features.is_empty() {
            return Err(XmError::Config("feature set is empty".into()));
        }
        for (i, f) in features.iter().enumerate() {
            if features[..i].contains(f) {
                return Err(XmError::Config(format!("feature '{f}' listed twice")));
            }
        }
        Ok(Self(features))
    }

    /// Degree, clustering, PPR spread, neighbor degree and clustering,
    /// eccentricity and Katz centrality.
    pub fn default_seven() -> Self {
        Self(vec![
            Feature::Degree,
            Feature::Clustering,
            Feature::PprStd,
            Feature::AvgNeighborDegree,
            Feature::AvgNeighborClustering,
            Feature::Eccentricity,
            Feature::Katz,
        ])
    }

    pub fn all() -> Self {
        Self(Feature::ALL.to_vec())
    }

    /// Comma-separated names; `default` and `all` are accepted as shorthands.
    pub fn parse(spec: &str) -> Result<Self> {
        match spec.trim() {
            "default" => Ok(Self::default_seven()),
            "all" => Ok(Self::all()),
            s => Self::new(
                s.split(',')
                    .filter(|t| !t.trim().is_empty())
                    .map(Feature::from_str)
                    .collect::<Result<Vec<_>>>()?,
            ),
        }
    }

    pub fn features(&self) -> &[Feature] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Default for FeatureSet {
    fn default() -> Self {
        Self::default_seven()
    }
}

impl TryFrom<Vec<Feature>> for FeatureSet {
    type Error = XmError;
    fn try_from(v: Vec<Feature>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<FeatureSet> for Vec<Feature> {
    fn from(s: FeatureSet) -> Self {
        s.0
    }
}

/// Parameters of the iterative features.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureParams {
    pub ppr_damping: f64,
    pub ppr_tol: f64,
    /// `None` picks `0.85 / λ_max`.
    pub katz_alpha: Option<f64>,
    pub katz_beta: f64,
    pub pagerank_damping: f64,
}

impl Default for FeatureParams {
    fn default() -> Self {
        Self {
            ppr_damping: 0.85,
            ppr_tol: 1e-8,
            katz_alpha: None,
            katz_beta: 1.0,
            pagerank_damping: 0.85,
        }
    }
}

/// Min and max of a column before normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnRange {
    pub min: f64,
    pub max: f64,
    pub constant: bool,
}

/// `n × f` matrix of per-node features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub values: Array2<f64>,
    pub names: Vec<String>,
    /// Present once the matrix has been min-max normalized.
    pub ranges: Option<Vec<ColumnRange>>,
    pub warnings: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(values: Array2<f64>, names: Vec<String>) -> Result<Self> {
        if values.ncols() != names.len() {
            return Err(XmError::Config(format!(
                "{} columns but {} names",
                values.ncols(),
                names.len()
            )));
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(XmError::Numerical("feature matrix has non-finite entries".into()));
        }
        Ok(Self {
            values,
            names,
            ranges: None,
            warnings: Vec::new(),
        })
    }

    pub fn node_count(&self) -> usize {
        self.values.nrows()
    }

    pub fn feature_count(&self) -> usize {
        self.values.ncols()
    }

    pub fn is_normalized(&self) -> bool {
        self.ranges.is_some()
    }

    pub fn row(&self, node: usize) -> ArrayView1<'_, f64> {
        self.values.row(node)
    }

    pub fn column(&self, name: &str) -> Option<ArrayView1<'_, f64>> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|j| self.values.column(j))
    }

    /// Columns of `other` appended to the right.
    pub fn hstack(&self, other: &FeatureMatrix) -> Result<FeatureMatrix> {
        if self.node_count() != other.node_count() {
            return Err(XmError::Config("feature matrices differ in node count".into()));
        }
        let values = ndarray::concatenate(ndarray::Axis(1), &[self.values.view(), other.values.view()])
            .expect("row counts checked");
        let mut out = FeatureMatrix::new(
            values,
            self.names.iter().chain(&other.names).cloned().collect(),
        )?;
        out.warnings = self.warnings.iter().chain(&other.warnings).cloned().collect();
        if let (Some(a), Some(b)) = (&self.ranges, &other.ranges) {
            out.ranges = Some(a.iter().chain(b).copied().collect());
        }
        Ok(out)
    }

    /// CSV with a header of feature names and one row per node.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.names)?;
        for row in self.values.rows() {
            w.write_record(row.iter().map(|v| format_float(*v)))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let names: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|t| {
                    t.trim().parse::<f64>().map_err(|_| XmError::Parse {
                        line: i + 2,
                        msg: format!("invalid number '{t}'"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        let values = rows_to_array(rows, names.len())?;
        let normalized = values.iter().all(|v| (0.0..=1.0).contains(v));
        let mut fm = Self::new(values, names)?;
        if normalized {
            fm.ranges = Some(column_ranges(&fm.values));
        }
        Ok(fm)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&FeatureMatrixFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: FeatureMatrixFile = serde_json::from_str(text)?;
        let n = file.names.len();
        let mut fm = Self::new(rows_to_array(file.values, n)?, file.names)?;
        fm.ranges = file.ranges;
        fm.warnings = file.warnings;
        Ok(fm)
    }
}

#[derive(Serialize, Deserialize)]
struct FeatureMatrixFile {
    names: Vec<String>,
    normalized: bool,
    ranges: Option<Vec<ColumnRange>>,
    warnings: Vec<String>,
    values: Vec<Vec<f64>>,
}

impl From<&FeatureMatrix> for FeatureMatrixFile {
    fn from(f: &FeatureMatrix) -> Self {
        Self {
            names: f.names.clone(),
            normalized: f.is_normalized(),
            ranges: f.ranges.clone(),
            warnings: f.warnings.clone(),
            values: f.values.rows().into_iter().map(|r| r.to_vec()).collect(),
        }
    }
}

pub(crate) fn rows_to_array(rows: Vec<Vec<f64>>, cols: usize) -> Result<Array2<f64>> {
    let n = rows.len();
    if let Some((i, _)) = rows.iter().enumerate().find(|(_, r)| r.len() != cols) {
        return Err(XmError::Parse {
            line: i + 2,
            msg: format!("expected {cols} columns"),
        });
    }
    Ok(Array2::from_shape_vec((n, cols), rows.into_iter().flatten().collect())
        .expect("shape checked"))
}

/// Shortest text that parses back to the same `f64`.
pub(crate) fn format_float(v: f64) -> String {
    format!("{v}")
}

/// Compute the requested structural features (unnormalized).
pub fn structural_features(g: &Graph, set: &FeatureSet) -> Result<FeatureMatrix> {
    structural_features_with(g, set, &FeatureParams::default())
}

pub fn structural_features_with(
    g: &Graph,
    set: &FeatureSet,
    params: &FeatureParams,
) -> Result<FeatureMatrix> {
    let n = g.node_count();
    let needs_ppr = set
        .features()
        .iter()
        .any(|f| matches!(f, Feature::PprMean | Feature::PprStd));
    let ppr_moments: Option<Vec<(f64, f64)>> = if needs_ppr {
        Some(
            (0..n)
                .into_par_iter()
                .map(|v| {
                    personalized_pagerank(g, v, params.ppr_damping, params.ppr_tol)
                        .map(|p| mean_std(&p.scores))
                })
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };

    let mut warnings = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(set.len());
    for &feature in set.features() {
        let col = match feature {
            Feature::Degree => g.degrees().into_iter().map(|d| d as f64).collect(),
            Feature::WeightedDegree => (0..n).map(|v| g.weighted_degree(v)).collect(),
            Feature::Clustering => clustering(g),
            Feature::PprMean => {
                warnings.push("ppr_mean is 1/n for every node (constant column)".into());
                ppr_moments.as_ref().unwrap().iter().map(|m| m.0).collect()
            }
            Feature::PprStd => ppr_moments.as_ref().unwrap().iter().map(|m| m.1).collect(),
            Feature::AvgNeighborDegree => avg_neighbor_degree(g),
            Feature::AvgNeighborClustering => avg_neighbor_clustering(g),
            Feature::EgoNetEdges => ego_net_edges(g),
            Feature::BurtConstraint => {
                let (c, isolated) = burt_constraint(g);
                if !isolated.is_empty() {
                    warnings.push(format!(
                        "burt_constraint set to 0 for {} isolated node(s)",
                        isolated.len()
                    ));
                }
                c
            }
            Feature::Betweenness => betweenness(g),
            Feature::Eccentricity => eccentricity(g),
            Feature::Pagerank => pagerank(g, params.pagerank_damping, 1e-12)?,
            Feature::DegreeCentrality => {
                let denom = (n.max(2) - 1) as f64;
                g.degrees().into_iter().map(|d| d as f64 / denom).collect()
            }
            Feature::Katz => {
                let alpha = params.katz_alpha.unwrap_or_else(|| default_katz_alpha(g));
                katz_centrality(g, alpha, params.katz_beta)?
            }
            Feature::EigenvectorCentrality => eigenvector_centrality(g)?,
        };
        columns.push(col);
    }
    let mut values = Array2::zeros((n, set.len()));
    for (j, col) in columns.into_iter().enumerate() {
        for (i, v) in col.into_iter().enumerate() {
            values[[i, j]] = v;
        }
    }
    let mut fm = FeatureMatrix::new(
        values,
        set.features().iter().map(|f| f.name().to_string()).collect(),
    )?;
    fm.warnings = warnings;
    Ok(fm)
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Per anchor `a`, two columns: hop distance from each node to `a`, and the
/// mass on `a` in each node's personalized PageRank vector.
///
/// Nodes that cannot reach an anchor get hop distance `diameter + 1`, where
/// the diameter is the largest finite hop distance in the graph.
pub fn positional_features(g: &Graph, anchors: &[usize]) -> Result<FeatureMatrix> {
    positional_features_with(g, anchors, &FeatureParams::default())
}

pub fn positional_features_with(
    g: &Graph,
    anchors: &[usize],
    params: &FeatureParams,
) -> Result<FeatureMatrix> {
    let n = g.node_count();
    if anchors.is_empty() {
        return Err(XmError::Config("at least one anchor is required".into()));
    }
    if let Some(&a) = anchors.iter().find(|&&a| a >= n) {
        return Err(XmError::Config(format!("anchor {a} out of range for {n} nodes")));
    }
    let ppr: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|v| personalized_pagerank(g, v, params.ppr_damping, params.ppr_tol).map(|p| p.scores))
        .collect::<Result<_>>()?;
    let hops: Vec<Vec<usize>> = anchors.iter().map(|&a| bfs_distances(g, a)).collect();
    let mut warnings = Vec::new();
    let unreachable = hops.iter().any(|h| h.contains(&local::UNREACHABLE));
    let fill = if unreachable {
        let diameter = eccentricity(g).into_iter().fold(0.0, f64::max);
        warnings.push(format!(
            "some nodes cannot reach an anchor; hop distance set to diameter + 1 = {}",
            diameter + 1.0
        ));
        diameter + 1.0
    } else {
        0.0
    };

    let mut values = Array2::zeros((n, 2 * anchors.len()));
    let mut names = Vec::with_capacity(2 * anchors.len());
    for (k, &a) in anchors.iter().enumerate() {
        names.push(format!("hops_to_{a}"));
        names.push(format!("ppr_of_{a}"));
        for v in 0..n {
            let h = hops[k][v];
            values[[v, 2 * k]] = if h == local::UNREACHABLE { fill } else { h as f64 };
            values[[v, 2 * k + 1]] = ppr[v][a];
        }
    }
    let mut fm = FeatureMatrix::new(values, names)?;
    fm.warnings = warnings;
    Ok(fm)
}

fn column_ranges(values: &Array2<f64>) -> Vec<ColumnRange> {
    values
        .columns()
        .into_iter()
        .map(|c| {
            let min = c.iter().copied().fold(f64::INFINITY, f64::min);
            let max = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            ColumnRange {
                min,
                max,
                constant: max - min <= 1e-12 * max.abs().max(1.0),
            }
        })
        .collect()
}

/// Per-column min-max scaling to `[0, 1]`. Constant columns become 0.5.
pub fn normalize_features(f: &FeatureMatrix) -> FeatureMatrix {
    let ranges = column_ranges(&f.values);
    let mut values = f.values.clone();
    for (mut col, r) in values.columns_mut().into_iter().zip(&ranges) {
        if r.constant {
            col.fill(0.5);
        } else {
            let span = r.max - r.min;
            col.mapv_inplace(|x| ((x - r.min) / span).clamp(0.0, 1.0));
        }
    }
    let mut warnings = f.warnings.clone();
    for (name, r) in f.names.iter().zip(&ranges) {
        if r.constant {
            let msg = format!("column '{name}' is constant; normalized to 0.5");
            if !warnings.contains(&msg) {
                warnings.push(msg);
            }
        }
    }
    FeatureMatrix {
        values,
        names: f.names.clone(),
        ranges: Some(ranges),
        warnings,
    }
}

/// Absolute Pearson correlations between feature columns. Constant columns
/// correlate 0 with everything else; the diagonal is 1.
pub fn feature_correlations(f: &FeatureMatrix) -> Result<Array2<f64>> {
    let n = f.node_count();
    if n < 3 {
        return Err(XmError::Config(format!(
            "correlations need at least 3 nodes, got {n}"
        )));
    }
    let k = f.feature_count();
    let centered: Vec<Vec<f64>> = f
        .values
        .columns()
        .into_iter()
        .map(|c| {
            let mean = c.sum() / n as f64;
            c.iter().map(|x| x - mean).collect()
        })
        .collect();
    let norms: Vec<f64> = centered
        .iter()
        .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let mut out = Array2::eye(k);
    for i in 0..k {
        for j in (i + 1)..k {
            let denom = norms[i] * norms[j];
            let rho = if denom <= 1e-300 {
                0.0
            } else {
                let dot: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum();
                (dot / denom).abs().min(1.0)
            };
            out[[i, j]] = rho;
            out[[j, i]] = rho;
        }
    }
    Ok(out)
}

//! Unsupervised node embedders, each trainable with or without the XM
//! penalties.

pub mod alias;
pub mod line;
pub mod sdne;

pub use alias::AliasTable;
pub use line::{line_train, noise_weights, LineConfig, LineOrder};
pub use sdne::{sdne_train, CodeActivation, SdneConfig, SdneLoss, SdneModel};

use std::io::Write;

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, XmError};
use crate::features::{format_float, rows_to_array, FeatureMatrix};
use crate::graph::Graph;
use crate::xm::XmConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Line1,
    Line2,
    Sdne,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Line1 => "line1",
            Method::Line2 => "line2",
            Method::Sdne => "sdne",
        }
    }
}

/// Trained `n × d` embedding plus provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingMatrix {
    #[serde(with = "matrix_rows")]
    pub values: Array2<f64>,
    pub method: Method,
    pub xm_enabled: bool,
    pub xm: Option<XmConfig>,
    pub seed: u64,
    pub epochs: usize,
    pub config_hash: String,
    /// Training objective per epoch.
    pub loss_history: Vec<f64>,
    /// Wall-clock seconds per epoch. Not reproducible; excluded from
    /// equality-sensitive outputs by callers that need byte-stable files.
    pub epoch_seconds: Vec<f64>,
}

impl EmbeddingMatrix {
    pub fn node_count(&self) -> usize {
        self.values.nrows()
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn row(&self, node: usize) -> ArrayView1<'_, f64> {
        self.values.row(node)
    }

    /// Fails if any row has (near) zero norm.
    pub fn check_collapse(&self) -> Result<()> {
        check_rows(&self.values)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(std::iter::once("node".to_string()).chain((0..self.dim()).map(|i| format!("d{i}"))))?;
        for (k, row) in self.values.rows().into_iter().enumerate() {
            w.write_record(std::iter::once(k.to_string()).chain(row.iter().map(|v| format_float(*v))))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Read just the matrix back from CSV; metadata is left at defaults.
    pub fn read_csv_values<R: std::io::Read>(input: R) -> Result<Array2<f64>> {
        let mut r = csv::Reader::from_reader(input);
        let cols = r.headers()?.len().saturating_sub(1);
        let mut rows = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let row = rec
                .iter()
                .skip(1)
                .map(|t| {
                    t.trim().parse::<f64>().map_err(|_| XmError::Parse {
                        line: i + 2,
                        msg: format!("invalid number '{t}'"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        rows_to_array(rows, cols)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Per-epoch wall-clock durations of a training run.
pub fn epoch_timings(result: &EmbeddingMatrix) -> &[f64] {
    &result.epoch_seconds
}

pub(crate) fn check_rows(values: &Array2<f64>) -> Result<()> {
    for (k, row) in values.rows().into_iter().enumerate() {
        if row.iter().any(|x| !x.is_finite()) {
            return Err(XmError::Numerical(format!("embedding of node {k} is not finite")));
        }
        if row.dot(&row).sqrt() < 1e-12 {
            return Err(XmError::Collapse { node: k });
        }
    }
    Ok(())
}

/// Either embedder with its configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum MethodConfig {
    Line(LineConfig),
    Sdne(SdneConfig),
}

impl MethodConfig {
    pub fn train(&self, g: &Graph, features: Option<&FeatureMatrix>) -> Result<EmbeddingMatrix> {
        match self {
            MethodConfig::Line(c) => line_train(g, c, features),
            MethodConfig::Sdne(c) => sdne_train(g, c, features),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MethodConfig::Line(_) => "line",
            MethodConfig::Sdne(_) => "sdne",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            MethodConfig::Line(c) => c.dim,
            MethodConfig::Sdne(c) => c.dim,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            MethodConfig::Line(c) => c.seed,
            MethodConfig::Sdne(c) => c.seed,
        }
    }

    pub fn xm(&self) -> Option<XmConfig> {
        match self {
            MethodConfig::Line(c) => c.xm,
            MethodConfig::Sdne(c) => c.xm,
        }
    }

    pub fn with_xm(&self, xm: Option<XmConfig>) -> Self {
        let mut out = self.clone();
        match &mut out {
            MethodConfig::Line(c) => c.xm = xm,
            MethodConfig::Sdne(c) => c.xm = xm,
        }
        out
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        let mut out = self.clone();
        match &mut out {
            MethodConfig::Line(c) => c.seed = seed,
            MethodConfig::Sdne(c) => c.seed = seed,
        }
        out
    }

    pub fn with_dim(&self, dim: usize) -> Self {
        let mut out = self.clone();
        match &mut out {
            MethodConfig::Line(c) => c.dim = dim,
            MethodConfig::Sdne(c) => c.dim = dim,
        }
        out
    }

    /// XM weights that worked well for this method in our experiments.
    /// The orthogonality gradient outgrows the sparsity gradient as the
    /// dimension rises, so its weight drops for wide codes.
    pub fn default_xm(&self) -> XmConfig {
        match self {
            MethodConfig::Line(_) => XmConfig::new(0.03, 0.003),
            MethodConfig::Sdne(c) if c.dim <= 32 => XmConfig::new(0.2, 0.2),
            MethodConfig::Sdne(_) => XmConfig::new(0.3, 0.01),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MethodConfig::Line(c) => c.validate(),
            MethodConfig::Sdne(c) => c.validate(),
        }
    }
}

/// SHA-256 of the JSON form of a configuration, hex encoded.
pub fn config_hash<T: Serialize>(cfg: &T) -> String {
    let text = serde_json::to_string(cfg).expect("configs serialize");
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Check that a feature matrix is present and usable when XM is on.
pub(crate) fn xm_features<'a>(
    xm: &Option<XmConfig>,
    features: Option<&'a FeatureMatrix>,
    n: usize,
) -> Result<Option<&'a FeatureMatrix>> {
    let Some(cfg) = xm else {
        return Ok(None);
    };
    cfg.validate()?;
    let f = features.ok_or_else(|| {
        XmError::Config("XM training requires a normalized sense-feature matrix".into())
    })?;
    if f.node_count() != n {
        return Err(XmError::Config(format!(
            "feature matrix has {} rows for {n} nodes",
            f.node_count()
        )));
    }
    if !f.is_normalized() {
        return Err(XmError::Config("XM training expects normalized features".into()));
    }
    for k in 0..n {
        let row = f.row(k);
        if row.dot(&row) == 0.0 {
            return Err(XmError::ZeroVector("sense feature vector f"));
        }
    }
    Ok(Some(f))
}

pub(crate) mod matrix_rows {
    use ndarray::Array2;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &Array2<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = m.rows().into_iter().map(|r| r.to_vec()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Array2<f64>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        let cols = rows.first().map_or(0, Vec::len);
        super::rows_to_array(rows, cols).map_err(serde::de::Error::custom)
    }
}

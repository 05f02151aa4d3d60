use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use xm_core::embed::{LineConfig, LineOrder, MethodConfig, SdneConfig};
use xm_core::eval::Combiner;
use xm_core::explain::NormalizationMode;
use xm_core::graph::{barbell, karate, load_edge_list, planted_partition, Graph};
use xm_core::xm::XmConfig;
use xm_core::{Result, XmError};

/// Where the graph comes from. Exactly one of the two must be set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InputSpec {
    pub builtin: Option<String>,
    pub path: Option<PathBuf>,
    pub weighted: bool,
}

pub const BUILTINS: &str = "karate, barbell, email-like";

impl InputSpec {
    pub fn load(&self) -> Result<Graph> {
        match (&self.builtin, &self.path) {
            (Some(name), None) => builtin(name),
            (None, Some(path)) => {
                let file = File::open(path)?;
                let report = load_edge_list(BufReader::new(file), self.weighted)?;
                if report.self_loops_dropped > 0 || report.duplicates_dropped > 0 {
                    eprintln!(
                        "warning: dropped {} self-loops and {} duplicate edges",
                        report.self_loops_dropped, report.duplicates_dropped
                    );
                }
                Ok(report.graph)
            }
            (Some(_), Some(_)) => Err(XmError::Config("give either --builtin or --input, not both".into())),
            (None, None) => Err(XmError::Config("no input graph: use --builtin or --input".into())),
        }
    }

    pub fn name(&self) -> String {
        match (&self.builtin, &self.path) {
            (Some(b), _) => b.clone(),
            (_, Some(p)) => p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
            _ => String::new(),
        }
    }
}

pub fn builtin(name: &str) -> Result<Graph> {
    match name {
        "karate" => Ok(karate()),
        "barbell" => barbell(10, 0),
        // planted communities with the density of the EU Email network
        "email-like" => planted_partition(1000, 20, 0.5, 0.0085, 1),
        other => Err(XmError::Config(format!("unknown builtin graph '{other}' (valid: {BUILTINS})"))),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Fully resolved settings of one invocation. Written next to every output
/// so a run can be repeated with `--config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub command: String,
    pub input: InputSpec,
    /// `default`, `all`, `positional` or a comma-separated feature list.
    pub features: String,
    pub anchors: Vec<usize>,
    pub method: MethodConfig,
    pub xm: Option<XmConfig>,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub format: Format,
    pub workers: usize,
    pub folds: usize,
    pub seeds: usize,
    pub mode: NormalizationMode,
    pub nodes: Vec<usize>,
    pub combiner: Combiner,
    pub embedding: Option<PathBuf>,
    pub feature_file: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: String::new(),
            input: InputSpec::default(),
            features: "default".into(),
            anchors: Vec::new(),
            method: MethodConfig::Sdne(SdneConfig::default()),
            xm: None,
            out: PathBuf::from("out"),
            seed: None,
            format: Format::Csv,
            workers: 1,
            folds: 3,
            seeds: 5,
            mode: NormalizationMode::Population,
            nodes: Vec::new(),
            combiner: Combiner::Concat,
            embedding: None,
            feature_file: None,
        }
    }
}

impl RunConfig {
    /// Overlay the keys of a JSON config file onto this configuration.
    pub fn merge_file(self, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let overlay: Value = serde_json::from_str(&text)?;
        let mut base = serde_json::to_value(&self)?;
        let command = self.command.clone();
        merge(&mut base, overlay);
        let mut out: RunConfig = serde_json::from_value(base)?;
        out.command = command;
        Ok(out)
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| XmError::Config(format!("--seed is required for `{}`", self.command)))
    }

    /// Method configuration with the resolved XM weights and seed applied.
    pub fn method_with_xm(&self) -> MethodConfig {
        let mut m = self.method.clone();
        if self.xm.is_some() {
            m = m.with_xm(self.xm);
        }
        if let Some(seed) = self.seed {
            m = m.with_seed(seed);
        }
        m
    }
}

fn merge(base: &mut Value, overlay: Value) {
    match (base, overlay) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                // a different method tag replaces the whole method block
                let replace = k == "method"
                    && b.get(&k).and_then(|x| x.get("method")) != v.get("method");
                match b.get_mut(&k) {
                    Some(slot) if !replace => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Method settings from command-line flags.
pub fn method_from_flags(name: &str, dim: Option<usize>, epochs: Option<usize>, lr: Option<f64>) -> Result<MethodConfig> {
    let mut m = match name {
        "line" | "line1" => MethodConfig::Line(LineConfig::default()),
        "line2" => MethodConfig::Line(LineConfig {
            order: LineOrder::Second,
            ..Default::default()
        }),
        "sdne" => MethodConfig::Sdne(SdneConfig::default()),
        other => {
            return Err(XmError::Config(format!("unknown method '{other}' (line | line2 | sdne)")));
        }
    };
    if let Some(d) = dim {
        m = m.with_dim(d);
    }
    match &mut m {
        MethodConfig::Line(c) => {
            if let Some(e) = epochs {
                c.epochs = e;
            }
            if let Some(r) = lr {
                c.initial_lr = r;
            }
        }
        MethodConfig::Sdne(c) => {
            if let Some(e) = epochs {
                c.epochs = e;
            }
            if let Some(r) = lr {
                c.learning_rate = r;
            }
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips() {
        let cfg = RunConfig {
            command: "embed".into(),
            seed: Some(4),
            xm: Some(XmConfig::new(0.1, 0.2)),
            ..Default::default()
        };
        let text = serde_json::to_string(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn file_overrides_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"seed": 9, "method": {"method": "sdne", "dim": 4}}"#).unwrap();
        let cfg = RunConfig {
            command: "embed".into(),
            seed: Some(1),
            ..Default::default()
        };
        let merged = cfg.merge_file(&path).unwrap();
        assert_eq!(merged.seed, Some(9));
        assert_eq!(merged.method.dim(), 4);
        assert_eq!(merged.command, "embed");
        match merged.method {
            MethodConfig::Sdne(c) => assert_eq!(c.hidden, vec![256]),
            _ => panic!("method changed"),
        }
    }

    #[test]
    fn input_sources_are_exclusive() {
        let both = InputSpec {
            builtin: Some("karate".into()),
            path: Some("x".into()),
            weighted: false,
        };
        assert!(matches!(both.load(), Err(XmError::Config(_))));
        assert!(matches!(InputSpec::default().load(), Err(XmError::Config(_))));
        assert!(builtin("nope").is_err());
    }
}

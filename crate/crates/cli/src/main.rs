mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use xm_core::embed::MethodConfig;
use xm_core::eval::Combiner;
use xm_core::explain::NormalizationMode;
use xm_core::xm::XmConfig;
use xm_core::{Result, XmError};

use config::{method_from_flags, Format, InputSpec, RunConfig};

#[derive(Parser)]
#[command(name = "xm", version, about = "Explainable node embeddings: features, training, explanations and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute normalized sense features.
    Features(Common),
    /// Train an embedding.
    Embed(Common),
    /// Build Explain matrices for an existing embedding.
    Explain(Common),
    /// k-fold link prediction with and without XM.
    Linkpred(Common),
    /// Four-way ablation: none, sparsity, orthogonality, both.
    Ablation(Common),
    /// Explain matrices for a few nodes of a bundled graph.
    Demo {
        /// karate or barbell
        name: String,
        #[command(flatten)]
        common: Common,
    },
    /// Summary statistics of a graph.
    Stats(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// Bundled graph: karate, barbell, email-like.
    #[arg(long)]
    builtin: Option<String>,
    /// Edge list file.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Read a third column of edge weights.
    #[arg(long)]
    weighted: bool,
    /// JSON file whose keys override the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Threads for folds and ablation cells.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// `default`, `all`, `positional` or a comma-separated list.
    #[arg(long, default_value = "default")]
    features: String,
    /// Anchor nodes for positional features.
    #[arg(long, value_delimiter = ',')]
    anchors: Vec<usize>,
    /// line, line2 or sdne.
    #[arg(long, default_value = "sdne")]
    method: String,
    #[arg(long, visible_alias = "d")]
    dim: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// Turn on XM with the method's default weights.
    #[arg(long)]
    xm: bool,
    /// Sparsity weight; implies --xm.
    #[arg(long)]
    gamma: Option<f64>,
    /// Orthogonality weight; implies --xm.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value_t = 3)]
    folds: usize,
    /// Number of seeds for the ablation.
    #[arg(long, default_value_t = 5)]
    seeds: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Population)]
    mode: ModeArg,
    /// Nodes to write Explain matrices for.
    #[arg(long, value_delimiter = ',')]
    nodes: Vec<usize>,
    #[arg(long, default_value = "concat")]
    combiner: String,
    /// Embedding file (CSV or JSON) for `explain`.
    #[arg(long)]
    embedding: Option<PathBuf>,
    /// Precomputed feature CSV for `explain`.
    #[arg(long)]
    feature_file: Option<PathBuf>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ModeArg {
    Population,
    PerMatrix,
}

impl Common {
    fn resolve(self, command: &str) -> Result<RunConfig> {
        let mut method = method_from_flags(&self.method, self.dim, self.epochs, self.lr)?;
        if command == "demo" {
            // small-graph settings under which XM visibly sparsifies the codes
            if self.dim.is_none() {
                method = method.with_dim(16);
            }
            if let MethodConfig::Sdne(c) = &mut method {
                c.epochs = self.epochs.unwrap_or(600);
                c.learning_rate = self.lr.unwrap_or(0.003);
                c.xm_warmup = 0.25;
            }
        }
        let xm = if self.xm || self.gamma.is_some() || self.delta.is_some() {
            let d = method.default_xm();
            Some(XmConfig::new(self.gamma.unwrap_or(d.gamma), self.delta.unwrap_or(d.delta)))
        } else {
            None
        };
        let cfg = RunConfig {
            command: command.into(),
            input: InputSpec {
                builtin: self.builtin,
                path: self.input,
                weighted: self.weighted,
            },
            features: self.features,
            anchors: self.anchors,
            method,
            xm,
            out: self.out,
            seed: self.seed,
            format: self.format,
            workers: self.workers,
            folds: self.folds,
            seeds: self.seeds,
            mode: match self.mode {
                ModeArg::Population => NormalizationMode::Population,
                ModeArg::PerMatrix => NormalizationMode::PerMatrix,
            },
            nodes: self.nodes,
            combiner: self.combiner.parse::<Combiner>()?,
            embedding: self.embedding,
            feature_file: self.feature_file,
        };
        let cfg = match &self.config {
            Some(path) => cfg.merge_file(path)?,
            None => cfg,
        };
        if cfg.workers == 0 {
            return Err(XmError::Config("--workers must be at least 1".into()));
        }
        cfg.method.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<()> {
    let (name, common, demo) = match cli.command {
        Command::Features(c) => ("features", c, None),
        Command::Embed(c) => ("embed", c, None),
        Command::Explain(c) => ("explain", c, None),
        Command::Linkpred(c) => ("linkpred", c, None),
        Command::Ablation(c) => ("ablation", c, None),
        Command::Demo { name, common } => ("demo", common, Some(name)),
        Command::Stats(c) => ("stats", c, None),
    };
    let cfg = common.resolve(name)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| XmError::Config(e.to_string()))?;
    pool.install(|| match name {
        "features" => commands::features(&cfg),
        "embed" => commands::embed(&cfg),
        "explain" => commands::explain(&cfg),
        "linkpred" => commands::linkpred(&cfg),
        "ablation" => commands::run_ablation(&cfg),
        "demo" => commands::demo(&cfg, demo.as_deref().unwrap_or_default()),
        _ => commands::stats(&cfg),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

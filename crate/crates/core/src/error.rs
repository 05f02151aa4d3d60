use thiserror::Error;

/// Errors produced by the library.
///
/// The variants are grouped so that a front end can map them onto a small
/// set of exit codes: input problems, configuration problems and numerical
/// failures.
#[derive(Debug, Error)]
pub enum XmError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("graph is empty")]
    EmptyGraph,

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown feature '{name}' (valid: {valid})")]
    UnknownFeature { name: String, valid: String },

    #[error("zero vector: {0} has zero norm")]
    ZeroVector(&'static str),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("trace must be 1 (got {0}); trace-normalize the matrix first")]
    TraceNotNormalized(f64),

    #[error("Katz iteration diverged; alpha must be below 1/lambda_max (use a smaller alpha)")]
    KatzDivergence,

    #[error("embedding collapse: node {node} has norm below 1e-12")]
    Collapse { node: usize },

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Divergence { epoch: usize },

    #[error("{0}")]
    Numerical(String),

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<XmError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl XmError {
    /// Exit code used by the command-line front end: 1 for input/output,
    /// 2 for configuration, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            XmError::Parse { .. }
            | XmError::EmptyGraph
            | XmError::InvalidGraph(_)
            | XmError::Io(_)
            | XmError::Json(_)
            | XmError::Csv(_) => 1,
            XmError::Config(_)
            | XmError::UnknownFeature { .. }
            | XmError::TraceNotNormalized(_) => 2,
            XmError::ZeroVector(_)
            | XmError::NotSymmetric(_)
            | XmError::KatzDivergence
            | XmError::Collapse { .. }
            | XmError::Divergence { .. }
            | XmError::Numerical(_) => 3,
            XmError::Fold { source, .. } => source.exit_code(),
        }
    }
}

pub type Result<T> = std::result::Result<T, XmError>;

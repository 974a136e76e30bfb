use thiserror::Error;

/// Errors raised while building or solving plant models.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{} diagnostic(s): {}", .0.len(), summarize(.0))]
    Invalid(Vec<crate::topology::Diagnostic>),

    #[error("nonpositive temperature {0} K")]
    NonpositiveTemperature(f64),

    #[error("stream `{0}` has no rigorous correlation")]
    MissingCorrelation(String),

    #[error("temperature {t} K outside valid range [{lo}, {hi}] for stream `{stream}`")]
    OutOfRange {
        stream: String,
        t: f64,
        lo: f64,
        hi: f64,
    },

    #[error("stream `{0}` has no property record")]
    MissingProperty(String),

    #[error("stream `{0}` has no heat of vaporization")]
    MissingHvap(String),

    #[error("node `{node}`: {message}")]
    Node { node: String, message: String },

    #[error("node `{node}`: {paradigm} paradigm is not supported for {kind}")]
    UnsupportedCombination {
        node: String,
        kind: String,
        paradigm: String,
    },

    #[error("plan: {0}")]
    Plan(String),

    #[error("scenario: {0}")]
    Scenario(String),

    #[error("system is not square: {rows} rows, {free} free variables")]
    NotSquare { rows: usize, free: usize },

    #[error("singular matrix (pivot {pivot:.3e} at column {column})")]
    Singular { column: usize, pivot: f64 },

    #[error("singular Jacobian at iteration {iteration}")]
    SingularJacobian { iteration: usize, iterate: Vec<f64> },

    #[error("solver: {0}")]
    Solver(String),

    #[error("exchanger `{0}`: temperature cross")]
    TemperatureCross(String),

    #[error("heat exchanger network iteration diverged after {0} iterations")]
    Divergence(usize),

    #[error("cascade stage {stage} failed: {source}")]
    Stage {
        stage: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("unknown case `{0}`")]
    UnknownCase(String),

    #[error("io: {0}")]
    Io(String),
}

fn summarize(diags: &[crate::topology::Diagnostic]) -> String {
    diags
        .iter()
        .take(3)
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn node(node: &str, message: impl Into<String>) -> Self {
        Error::Node {
            node: node.to_string(),
            message: message.into(),
        }
    }
}

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} out of range: {reason}")]
    OutOfRange { what: &'static str, reason: String },

    #[error("unknown graph name `{0}`")]
    UnknownGraph(String),

    #[error("graph has {vertices} vertices, limit is {limit}")]
    GraphTooLarge { vertices: usize, limit: usize },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{0} must not be empty")]
    Empty(&'static str),

    #[error("budget of {limit} {unit} exceeded")]
    BudgetExceeded { limit: u64, unit: &'static str },

    #[error("search budget exhausted after examining {examined} candidate tuples")]
    BudgetExhausted { examined: u64 },

    #[error("grid was built over {grid} points but the measure has {measure} atoms")]
    GridMismatch { grid: usize, measure: usize },

    #[error("unsupported graph for this estimator: {0}")]
    UnsupportedGraph(String),

    #[error("ratio undefined: {0}")]
    UndefinedRatio(&'static str),

    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn out_of_range(what: &'static str, reason: impl Into<String>) -> Error {
    Error::OutOfRange {
        what,
        reason: reason.into(),
    }
}

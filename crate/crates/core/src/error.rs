use thiserror::Error;

/// Errors produced by the geometry kernels and the gluing pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate vertex: a side adjacent to the angle has zero length")]
    DegenerateVertex,

    #[error("no comparison triangle on the k-plane (k = {k}) for sides pq = {pq}, qr = {qr}, pr = {pr}")]
    NoTriangle { k: f64, pq: f64, qr: f64, pr: f64 },

    #[error("chart domain is empty")]
    EmptyDomain,

    #[error("point {0} is outside the chart domain")]
    OutOfDomain(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("difference vector has zero length")]
    ZeroVector,

    #[error("no nested strainer pair found at center {0}")]
    StrainerNotFound(usize),

    #[error("transported strainer at center {center} has quality {delta_star} >= limit {limit}")]
    TransportQualityFail {
        center: usize,
        delta_star: f64,
        limit: f64,
    },

    #[error("spaces do not carry coordinates of the same model space")]
    IncompatibleModels,

    #[error("point {point} is not in the domain of chart {chart}")]
    NotInChart { point: usize, chart: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid metric: {0}")]
    Validation(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

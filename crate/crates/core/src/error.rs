use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown shape tag `{0}`")]
    UnknownShape(String),

    #[error("degenerate domain: {0}")]
    DegenerateDomain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed mask raster at line {line}: {msg}")]
    MaskFormat { line: usize, msg: String },

    #[error("exponent q = {q} is not subcritical (p* = {critical})")]
    SupercriticalExponent { q: f64, critical: f64 },

    #[error("primal-dual iteration at t = {t} stopped after {iterations} steps with gap {gap:e}")]
    TvNotConverged { t: f64, gap: f64, iterations: usize },

    #[error("no sign change: {0}")]
    NoSignChange(String),

    #[error("sparse factorization failed: {0}")]
    Factorization(String),

    #[error("sweep aborted at p = {p}: {reason}")]
    SweepAborted { p: f64, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

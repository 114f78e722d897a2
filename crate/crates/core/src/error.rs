use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{name} = {value} is outside its domain ({expected})")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("E|eps|^alpha is infinite: alpha = {alpha} >= nu = {nu}")]
    InfiniteNormalizer { alpha: f64, nu: f64 },

    #[error("series generation failed at index {index}: {reason}")]
    Generation { index: usize, reason: String },

    #[error("no root: {0}")]
    NoRoot(String),

    #[error("no exceedances above threshold {threshold}")]
    NoExceedances { threshold: f64 },

    #[error("lag {lag} needs padding of at least {needed}, series has {max_lag}")]
    LagOutOfRange {
        lag: i64,
        needed: usize,
        max_lag: usize,
    },

    #[error("lag {0} is not supported here")]
    UnsupportedLag(i64),

    #[error("unsupported functional: {0}")]
    UnsupportedFunctional(String),

    #[error("{degenerate} of {total} bootstrap replicates were degenerate")]
    UnreliableBootstrap { degenerate: usize, total: usize },

    #[error("no conditioning events: {0}")]
    NoConditioningEvents(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(name: &'static str, value: f64, expected: &'static str) -> Error {
    Error::Domain {
        name,
        value,
        expected,
    }
}

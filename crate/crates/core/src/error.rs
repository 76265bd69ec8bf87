use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("curve is defined on a different grid than the reference sample")]
    GridMismatch,

    #[error("{0}")]
    Domain(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error(
        "no direction has projected MAD >= {beta:e} (largest observed MAD is {max_mad:e}); \
         lower beta or the quantile level u"
    )]
    EmptyDirectionSet { beta: f64, max_mad: f64 },

    #[error("sample is degenerate: every sampled direction has zero projected MAD")]
    DegenerateSample,

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("depth notion `{0}` is registered but not implemented")]
    Unimplemented(String),

    #[error("unknown depth notion `{0}`")]
    UnknownNotion(String),

    #[error("{failed} of {runs} Monte Carlo runs failed (more than 5%)")]
    ExperimentFailed { failed: usize, runs: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

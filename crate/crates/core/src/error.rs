use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} did not converge (residual {residual:e})")]
    NonConvergence { what: &'static str, residual: f64 },

    #[error("edge regularity violated: margin 1 - lambda_max*c = {margin:.6} below threshold {threshold}")]
    EdgeConditionViolated { margin: f64, threshold: f64 },

    #[error("invalid population spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("eigen decomposition failed: {0}")]
    EigenFailure(String),

    #[error("degenerate spectrum: top three eigenvalues coincide")]
    DegenerateSpectrum,

    #[error("scaling fit needs at least 3 sizes, got {0}")]
    InsufficientSizes(usize),

    #[error("malformed matrix file: {0}")]
    MatrixFormat(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

use std::path::PathBuf;

/// Errors raised across the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("integration fault at t = {t} s: non-finite state derivative")]
    IntegrationFault { t: f64 },

    #[error("singular geometry: {0}")]
    Singularity(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("determinism fault in state {state}: transitions {first} and {second} fire with equal priority")]
    Determinism { state: String, first: String, second: String },

    #[error("surrogate error: {0}")]
    Surrogate(String),

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    TrainingDiverged { epoch: usize, loss: f64 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("i/o error on {path}: {source}")]
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
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

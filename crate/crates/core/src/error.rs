use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid bounds: max {max} must exceed min {min}")]
    InvalidBounds { min: f64, max: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("clothing surface temperature did not converge after {iterations} iterations")]
    PmvNotConverged { iterations: usize },

    #[error("non-finite building state at zone {zone}")]
    NonFiniteState { zone: usize },

    #[error("unknown weather profile `{0}`")]
    UnknownProfile(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: PathBuf, column: String },

    #[error("{path}:{line}: step {step} breaks ordering (previous step {previous})")]
    Ordering {
        path: PathBuf,
        line: usize,
        previous: i64,
        step: i64,
    },

    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("non-finite prediction at rollout step {step}")]
    NonFinitePrediction { step: usize },

    #[error("non-finite trajectory cost for sample {sample}")]
    NonFiniteCost { sample: usize },

    #[error("controller failed at step {step}: {source}")]
    Controller {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("model {model}: {source}")]
    Model {
        model: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("model file {path}: {message}")]
    ModelFormat { path: PathBuf, message: String },

    #[error("config: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}

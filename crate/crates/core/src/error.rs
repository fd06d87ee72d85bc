use std::path::PathBuf;

use vectorplus_chem::ChemError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("non-positive value at row {row}")]
    NonPositiveValue { row: usize },
    #[error("need at least 2 classes, found {0}")]
    InvalidClassCount(usize),
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("batch of {0} is too small, need at least 2")]
    BatchTooSmall(usize),
    #[error("non-finite loss in {stage} at epoch {epoch}")]
    NonFiniteLoss { stage: &'static str, epoch: usize },
    #[error("covariance of component {0} is not positive definite")]
    SingularCovariance(usize),
    #[error("component {0} lost all its points")]
    EmptyComponent(usize),
    #[error("affinity matrix must be square, got {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },
    #[error("token {0:?} is not in the vocabulary")]
    UnknownToken(String),
    #[error("invalid SMILES {0:?}")]
    InvalidSmiles(String),
    #[error("need {need} reference points, have {have}")]
    InsufficientNeighbors { need: usize, have: usize },
    #[error("model mismatch: {0}")]
    ModelMismatch(String),
    #[error("matrix is not positive definite")]
    NotPd,
    #[error("lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {need} rows, have {have}")]
    InsufficientData { need: usize, have: usize },
    #[error("degenerate class structure: {0}")]
    DegenerateClass(String),
    #[error(transparent)]
    Chem(#[from] ChemError),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Wraps an error with the pipeline stage it came from.
    pub fn in_stage(stage: &'static str) -> impl FnOnce(Error) -> Error {
        move |e| Error::Stage {
            stage,
            source: Box::new(e),
        }
    }

    /// True for problems with the caller's inputs (files, columns, config)
    /// rather than with a pipeline stage.
    pub fn is_usage(&self) -> bool {
        if let Error::Stage { source, .. } = self {
            return source.is_usage();
        }
        matches!(
            self,
            Error::Io { .. }
                | Error::Csv(_)
                | Error::Json(_)
                | Error::Schema(_)
                | Error::InvalidConfig(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

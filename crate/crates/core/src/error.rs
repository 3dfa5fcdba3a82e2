use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid hyperparameter: {0}")]
    InvalidHyper(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite input to {0}")]
    NonFinite(&'static str),

    #[error("singular system in {update}: matrix is not positive definite")]
    SingularSystem { update: String },

    #[error("matrix is not symmetric in {update}")]
    NotSymmetric { update: String },

    #[error("vocabulary is empty after filtering")]
    EmptyVocabulary,

    #[error("degenerate range: all {0} values are equal")]
    DegenerateRange(&'static str),

    #[error("length mismatch: {0} predictions vs {1} actual values")]
    LengthMismatch(usize, usize),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("unknown job: {0}")]
    UnknownJob(String),

    #[error("unknown pair: job={job}, company={company}")]
    UnknownPair { job: String, company: String },

    #[error("no job has at least {0} observed salaries; nothing to split")]
    NoEligibleJobs(usize),

    #[error("training diverged (objective {0:.3e}); try a smaller learning rate")]
    Divergence(f64),

    #[error("method {method} failed on fold {fold}: {source}")]
    Method {
        method: String,
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: duplicate annotation id {id:?}")]
    DuplicateId { line: usize, id: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{doc_id}: annotation {id} span ends at {end} but the text has {len} characters")]
    SpanOutOfBounds {
        doc_id: String,
        id: String,
        end: usize,
        len: usize,
    },

    #[error("invalid annotation {id}: {message}")]
    InvalidRecord { id: String, message: String },

    #[error("{category}: requested {requested} distinct surrogates but the generator can produce at most {capacity}")]
    PoolCapacity {
        category: String,
        requested: u64,
        capacity: u64,
    },

    #[error("surrogate pool is empty")]
    EmptyPool,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{source_name}, row {row}: {message}")]
    Csv {
        source_name: String,
        row: usize,
        message: String,
    },

    #[error("replacement plan does not match document {doc_id}: {message}")]
    PlanMismatch { doc_id: String, message: String },

    #[error("infeasible distribution targets: {0}")]
    Infeasible(String),

    #[error("write failed: {0}")]
    Write(String),

    #[error("numerical failure: {0}")]
    Numeric(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

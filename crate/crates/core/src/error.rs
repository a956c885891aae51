use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{file}:{line}: {msg}")]
    Parse {
        file: String,
        line: usize,
        msg: String,
    },
    #[error("duplicate synset {0}")]
    DuplicateSynset(String),
    #[error("unknown synset {0}")]
    UnknownSynset(String),
    #[error("part-of-speech mismatch: {0} vs {1}")]
    PosMismatch(String, String),
    #[error("hypernym cycle detected through {0}")]
    Cycle(String),
    #[error("unresolved hypernym {target} referenced by {referrer}")]
    UnresolvedHypernym { referrer: String, target: String },
    #[error("unmapped class {dataset}:{class}")]
    UnmappedClass { dataset: String, class: String },
    #[error("classes without any synset mapping: {0}")]
    MappingGaps(String),
    #[error("quota exceeds available samples for class {class}: requested {requested}, available {available}")]
    QuotaExceeded {
        class: String,
        requested: usize,
        available: usize,
    },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("scores contain a single class only (need both ID and OOD)")]
    SingleClass,
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("fixture generation failed: {0}")]
    Fixture(String),
    #[error("malformed {what}: {msg}")]
    Format { what: String, msg: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(what: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Format {
            what: what.into(),
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

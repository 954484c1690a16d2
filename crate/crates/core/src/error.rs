use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("unknown candidate {0:?}")]
    UnknownCandidate(String),

    #[error("candidate {0:?} appears twice in one ranking")]
    DuplicatePreference(String),

    #[error("duplicate ballot id {0:?}")]
    DuplicateBallotId(String),

    #[error("unknown ballot id {0:?}")]
    UnknownBallotId(String),

    #[error("no interpretation for drawn ballot {0:?}")]
    MissingInterpretation(String),

    #[error("unsupported outcome: {0}")]
    UnsupportedOutcome(String),

    #[error("full manual count required: {0}")]
    FullCount(String),

    #[error("schema version mismatch: expected {expected}, found {found}")]
    SchemaVersion { expected: u32, found: u32 },

    #[error("audit state checksum mismatch; the state file was modified")]
    Checksum,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}

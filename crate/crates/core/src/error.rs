use std::path::PathBuf;

use thiserror::Error;

use crate::power::FeasibilityReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid topology: {0}")]
    Validation(String),

    #[error("unknown node `{0}`")]
    UnknownNode(String),

    #[error("{0}")]
    Domain(String),

    #[error("assignment is infeasible: {0}")]
    Infeasible(FeasibilityReport),

    #[error("invalid model input: {0}")]
    Model(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("instance exceeds the oracle envelope: {0}")]
    OracleEnvelope(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

//! Error type for the command-line front end.
//!
//! Core numerical failures pass through unchanged; everything the CLI can
//! get wrong on its own (bad configuration, malformed CSV, filesystem
//! trouble) gets its own variant so exit codes and messages stay precise.

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("unknown experiment {name:?}; known experiments: {known}")]
    UnknownExperiment { name: String, known: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed result table at line {line}: {what}")]
    Csv { line: usize, what: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] seqlab_core::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

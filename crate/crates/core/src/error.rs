use std::path::PathBuf;

use thiserror::Error;

/// Unified error type for calibration, simulation and I/O failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("config field `{field}`: {msg}")]
    Config { field: String, msg: String },

    #[error("pipeline step `{step}` failed: {source}")]
    Pipeline {
        step: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub fn config(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            msg: msg.into(),
        }
    }

    pub fn in_step(self, step: &'static str) -> Self {
        Error::Pipeline {
            step,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

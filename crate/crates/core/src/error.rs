use std::path::PathBuf;

use thiserror::Error;

use crate::propagate::SimulationRecord;

/// A single violated parameter invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Violation {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {}", join_violations(.0))]
    Validation(Vec<Violation>),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("numerical instability at xi = {xi:.6e}, tau = {tau:.6e}: {reason}")]
    Instability {
        xi: f64,
        tau: f64,
        reason: String,
        partial: Option<Box<SimulationRecord>>,
    },

    #[error("diagnostic failed: {0}")]
    Diagnostic(String),

    #[error("{context} ({path}): {source}")]
    Io {
        context: &'static str,
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn diagnostic(msg: impl Into<String>) -> Self {
        Error::Diagnostic(msg.into())
    }

    pub fn io(context: &'static str, path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            context,
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command line front end and the C ABI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::UnknownPreset(_) | Error::Parse { .. } => 2,
            Error::Instability { .. } => 3,
            Error::Io { .. } => 4,
            Error::Diagnostic(_) => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

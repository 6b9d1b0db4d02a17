use serde_json::json;
use thiserror::Error;

use crate::config::Violation;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("invalid config: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Validation(Vec<Violation>),
    #[error("numerical failure: {0}")]
    Numerical(bridgelab::Error),
    #[error("io failure: {0}")]
    Io(String),
}

impl From<bridgelab::Error> for CliError {
    fn from(e: bridgelab::Error) -> Self {
        match e {
            bridgelab::Error::Params(p) => CliError::Validation(vec![Violation {
                path: "params".into(),
                message: p.to_string(),
            }]),
            other => CliError::Numerical(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Parse(_) => "parse",
            CliError::Validation(_) => "validation",
            CliError::Numerical(_) => "numerical",
            CliError::Io(_) => "io",
        }
    }

    /// Structured form written to stderr.
    pub fn to_json(&self) -> serde_json::Value {
        let violations = match self {
            CliError::Validation(v) => serde_json::to_value(v).unwrap_or_default(),
            _ => json!([]),
        };
        json!({
            "schema": "bridgelab.error.v1",
            "kind": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
            "violations": violations,
        })
    }
}

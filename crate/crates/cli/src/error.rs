use std::path::PathBuf;

use serde_json::json;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed JSON or a value of the wrong shape. `field` is the path
    /// inside the document, empty at the root.
    #[error("parse error at `{field}`: {message}")]
    Parse { field: String, message: String },

    #[error("invalid `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("{context}: {source}")]
    Model {
        context: String,
        #[source]
        source: infrashare::Error,
    },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    pub fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "io",
            CliError::Parse { .. } => "parse",
            CliError::Validation { .. } => "validation",
            CliError::Model { .. } => "model",
            CliError::UnknownPreset(_) => "unknown-preset",
            CliError::Output(_) => "output",
        }
    }

    /// Configuration problems exit with 2, failures while running with 1.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Validation { .. } | CliError::UnknownPreset(_) => 2,
            _ => 1,
        }
    }

    /// Machine-readable form written to stderr.
    pub fn to_json(&self) -> serde_json::Value {
        let mut body = json!({
            "kind": self.kind(),
            "message": self.to_string(),
        });
        match self {
            CliError::Parse { field, .. } | CliError::Validation { field, .. } => {
                body["field"] = json!(field);
            }
            CliError::Io { path, .. } => body["path"] = json!(path.display().to_string()),
            CliError::Model { context, source } => {
                body["context"] = json!(context);
                body["cause"] = json!(source.to_string());
            }
            _ => {}
        }
        json!({ "error": body })
    }
}

/// Attaches context to core errors.
pub(crate) trait Context<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T>;
}

impl<T> Context<T> for infrashare::Result<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T> {
        self.map_err(|source| CliError::Model {
            context: what(),
            source,
        })
    }
}

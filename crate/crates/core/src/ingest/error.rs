use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}:{column}: parse error: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        reason: String,
    },

    #[error("{path}: schema error{}: {reason}", frame.as_ref().map(|f| format!(" in frame `{f}`")).unwrap_or_default())]
    Schema {
        path: PathBuf,
        frame: Option<String>,
        reason: String,
    },

    #[error("{path}: cannot decode mask: {reason}")]
    Decode { path: PathBuf, reason: String },

    #[error("dimension mismatch for `{what}`: expected {expected_w}x{expected_h}, got {actual_w}x{actual_h}")]
    DimensionMismatch {
        what: String,
        expected_w: u32,
        expected_h: u32,
        actual_w: u32,
        actual_h: u32,
    },

    #[error("frame `{frame}`: missing {kind} mask (looked for {})", tried.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", "))]
    MissingMask {
        frame: String,
        kind: &'static str,
        tried: Vec<PathBuf>,
    },
}

impl IngestError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        IngestError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn schema(path: impl Into<PathBuf>, frame: Option<&str>, reason: impl Into<String>) -> Self {
        IngestError::Schema {
            path: path.into(),
            frame: frame.map(str::to_owned),
            reason: reason.into(),
        }
    }

    pub(crate) fn from_json(path: impl Into<PathBuf>, err: serde_json::Error) -> Self {
        let path = path.into();
        match err.classify() {
            serde_json::error::Category::Data => IngestError::Schema {
                path,
                frame: None,
                reason: format!("{err}"),
            },
            _ => IngestError::Parse {
                path,
                line: err.line(),
                column: err.column(),
                reason: format!("{err}"),
            },
        }
    }
}

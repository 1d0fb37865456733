//! Error types for parsing, detection, and annotation.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("cannot determine IaC language for {path:?}")]
    UnknownLanguage { path: String },

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("detection span {line} lies beyond the script ({line_count} lines)")]
    SpanOutOfRange { line: usize, line_count: usize },

    #[error("invalid rule configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

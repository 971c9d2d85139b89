//! Crate-wide error type.
//!
//! Variants are grouped by how a caller should react (and by the process
//! exit code the CLI maps them to): I/O and file-format problems (`1`),
//! validation of user-supplied inputs (`2`), and numerical failures (`3`).

use std::path::PathBuf;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// All errors produced by this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Underlying filesystem error, annotated with the path involved.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A file exists but its contents do not match the expected format
    /// (bad magic, truncated payload, malformed JSON, unsupported variant).
    #[error("malformed {format} file {path}: {reason}")]
    Format {
        format: &'static str,
        path: PathBuf,
        reason: String,
    },

    /// User-supplied data failed validation (annotation schema violations,
    /// mismatched track lengths, unknown identifiers, bad arguments).
    #[error("validation error: {0}")]
    Validation(String),

    /// A numerical routine could not produce a meaningful result
    /// (degenerate fits, diverged training, non-finite values).
    #[error("numerical error: {0}")]
    Numerical(String),
}

impl Error {
    /// Wrap an [`std::io::Error`] with the path that produced it.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Shorthand for a file-format error.
    pub fn format(format: &'static str, path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format { format, path: path.into(), reason: reason.into() }
    }

    /// Shorthand for a validation error.
    pub fn validation(reason: impl Into<String>) -> Self {
        Error::Validation(reason.into())
    }

    /// Shorthand for a numerical error.
    pub fn numerical(reason: impl Into<String>) -> Self {
        Error::Numerical(reason.into())
    }

    /// Process exit code the CLI uses for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } | Error::Format { .. } => 1,
            Error::Validation(_) => 2,
            Error::Numerical(_) => 3,
        }
    }
}

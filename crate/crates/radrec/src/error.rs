//! Crate-wide error type.

use std::path::PathBuf;

/// Errors produced by the library.
///
/// Variants are grouped into three broad categories that the CLI maps to
/// exit codes: invalid arguments / precondition violations, file and
/// format problems, and numeric failures inside solvers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller-supplied argument violates an operation precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Kernel half-widths outside the validated set.
    #[error("unsupported kernel half-width {0} (expected 1, 2 or 3)")]
    UnsupportedHalfWidth(usize),

    /// A field grid too small to host a single full footprint.
    #[error("field of {rows}x{cols} is too small for a kernel with half-width {half_width}")]
    FieldTooSmall {
        rows: usize,
        cols: usize,
        half_width: usize,
    },

    /// An observation or pixel index outside its valid range.
    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    /// Grid shapes that must agree do not.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// The kernel named on the command line disagrees with file metadata.
    #[error("kernel mismatch: {0}")]
    KernelMismatch(String),

    /// Underlying I/O failure, annotated with the path involved.
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A text-format violation, reported with its line number.
    #[error("{path}:{line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// A numeric failure: factorization breakdown, non-convergence, or an
    /// internal consistency check that did not hold.
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Self::Format {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// Process exit status associated with this error class: 2 for usage
    /// and validation problems, 3 for I/O and file-format problems, 4 for
    /// numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_)
            | Error::UnsupportedHalfWidth(_)
            | Error::FieldTooSmall { .. }
            | Error::IndexOutOfRange { .. }
            | Error::ShapeMismatch(_)
            | Error::KernelMismatch(_) => 2,
            Error::Io { .. } | Error::Format { .. } => 3,
            Error::Numeric(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

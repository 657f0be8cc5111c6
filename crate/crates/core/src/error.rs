use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised anywhere in the pipeline.
///
/// Every variant belongs to one [`ErrorKind`], which the CLI maps onto its
/// process exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {0}")]
    MissingFile(PathBuf),

    #[error("unsupported bit depth in {path}: {detail}")]
    UnsupportedBitDepth { path: PathBuf, detail: String },

    #[error("corrupt stream in {path}: {detail}")]
    CorruptStream { path: PathBuf, detail: String },

    #[error("format mismatch in {path}: {detail}")]
    FormatMismatch { path: PathBuf, detail: String },

    #[error("dimension overflow: {0}")]
    DimensionOverflow(String),

    #[error("value out of range for encoding: {0}")]
    OutOfRange(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("image too small: {0}")]
    ImageTooSmall(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("no valid pixels to evaluate")]
    NoValidPixels,

    #[error("matching costs are not available from an external matcher")]
    CostsUnavailable,

    #[error("external matcher exited with {status}: {stderr}")]
    ExternalExit { status: String, stderr: String },

    #[error("external matcher timed out after {0:.1} s")]
    ExternalTimeout(f64),

    #[error("external matcher output unusable: {0}")]
    ExternalOutput(String),

    #[error("matcher failed at shift {shift}: {source}")]
    AtShift {
        shift: i32,
        #[source]
        source: Box<Error>,
    },

    #[error("every image in the dataset failed")]
    AllImagesFailed,

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Coarse error classes, one per CLI exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Io,
    External,
    AllFailed,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Validation => 2,
            ErrorKind::Io => 3,
            ErrorKind::External => 4,
            ErrorKind::AllFailed => 5,
        }
    }
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::MissingFile(_)
            | Error::UnsupportedBitDepth { .. }
            | Error::CorruptStream { .. }
            | Error::FormatMismatch { .. }
            | Error::DimensionOverflow(_)
            | Error::OutOfRange(_)
            | Error::DimensionMismatch(_)
            | Error::ImageTooSmall(_)
            | Error::InvalidConfig(_)
            | Error::NoValidPixels
            | Error::CostsUnavailable => ErrorKind::Validation,
            Error::ExternalExit { .. } | Error::ExternalTimeout(_) | Error::ExternalOutput(_) => {
                ErrorKind::External
            }
            Error::AtShift { source, .. } => source.kind(),
            Error::AllImagesFailed => ErrorKind::AllFailed,
            Error::Io { .. } => ErrorKind::Io,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

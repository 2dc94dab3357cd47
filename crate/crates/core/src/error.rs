use std::path::PathBuf;

use thiserror::Error;

/// Everything that can go wrong inside the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("semi-axes must be positive (got {r1}, {r2})")]
    NonPositiveAxis { r1: f64, r2: f64 },

    #[error("non-finite ellipse parameter")]
    NonFiniteParameter,

    #[error("value {value} at index {index} is outside the allowed range for a {kind} volume")]
    OutOfRangeValue {
        index: usize,
        value: f64,
        kind: &'static str,
    },

    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },

    #[error("mask has no foreground pixels")]
    EmptyMask,

    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),

    #[error("no eigenvector satisfies the ellipse condition")]
    NoEllipseSolution,

    #[error("conic is not an ellipse (discriminant {discriminant} >= 0)")]
    NotAnEllipse { discriminant: f64 },

    #[error("conic describes an imaginary ellipse")]
    ImaginaryEllipse,

    #[error("invalid grid size {0}; need at least 2")]
    InvalidSize(usize),

    #[error("ellipse too small to rasterize (w={w}, h={h}; both must be >= 0.5 px)")]
    DegenerateEllipse { w: f64, h: f64 },

    #[error("slice index {index} out of range for depth {depth}")]
    IndexOutOfRange { index: usize, depth: usize },

    #[error("threshold {0} outside the open interval (0, 1)")]
    OutOfRangeThreshold(f64),

    #[error("input contains non-finite values")]
    NonFiniteInput,

    #[error("loss became non-finite at step {step}; learning rate too large")]
    NonFiniteLoss { step: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("ground truth is empty; sensitivity is undefined")]
    EmptyGroundTruth,

    #[error("volume has no foreground voxels")]
    EmptyVolume,

    #[error("both volumes are empty")]
    BothEmpty,

    #[error("label lists differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("cannot read {path}: {reason}")]
    UnreadableFile { path: PathBuf, reason: String },

    #[error("inconsistent slice dimensions in {path}: expected {expected:?}, got {actual:?}")]
    InconsistentDimensions {
        path: PathBuf,
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("bad magic bytes; not an F32V file")]
    BadMagic,

    #[error("unsupported F32V version {0}")]
    UnsupportedVersion(u8),

    #[error("file truncated: expected {expected} bytes, found {actual}")]
    TruncatedFile { expected: usize, actual: usize },

    #[error("parse error on line {line}: {message}")]
    ParseError { line: u64, message: String },

    #[error("invalid phantom spec: {0}")]
    InvalidSpec(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the filesystem or of file contents, as opposed
    /// to numeric or degenerate-input failures.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            Error::UnreadableFile { .. }
                | Error::InconsistentDimensions { .. }
                | Error::BadMagic
                | Error::UnsupportedVersion(_)
                | Error::TruncatedFile { .. }
                | Error::ParseError { .. }
                | Error::Io(_)
        )
    }

    pub(crate) fn shape(expected: impl std::fmt::Debug, actual: impl std::fmt::Debug) -> Self {
        Error::ShapeMismatch {
            expected: format!("{expected:?}"),
            actual: format!("{actual:?}"),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

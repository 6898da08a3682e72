//! Crate-wide error type.

use crate::event::Violation;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },

    #[error("line {line}: coordinate ({x},{y}) outside {width}x{height} sensor")]
    OutOfBoundsCoordinate {
        line: usize,
        x: u16,
        y: u16,
        width: u16,
        height: u16,
    },

    #[error("line {line}: polarity must be 1 or -1, got {value}")]
    InvalidPolarity { line: usize, value: String },

    #[error("record {index}: {reason}")]
    MalformedRecord { index: usize, reason: String },

    #[error("bad magic: expected {expected:?}")]
    BadMagic { expected: &'static str },

    #[error("truncated {what}")]
    Truncated { what: &'static str },

    #[error("unsupported format version {found} (supported: {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },

    #[error("invalid sensor geometry {width}x{height}")]
    InvalidGeometry { width: u16, height: u16 },

    #[error("stream invariant violations: {0:?}")]
    InvalidStream(Vec<Violation>),

    #[error("stream is not sorted at index {index}")]
    UnsortedStream { index: usize },

    #[error("window contains no events")]
    EmptyWindow,

    #[error("sequence is empty")]
    EmptySequence,

    #[error("dataset contains no usable sequences")]
    EmptyDataset,

    #[error("operation requires a fully labeled stream")]
    UnlabeledInput,

    #[error("shape mismatch: {context}")]
    ShapeMismatch { context: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("pool factor {factor} does not divide {width}x{height} grid")]
    NonDivisiblePoolFactor { factor: usize, width: usize, height: usize },

    #[error("grid value {value} at ({x},{y},{c}) outside [0,1], cannot encode as PGM")]
    GridValueOutOfRange { value: f64, x: usize, y: usize, c: usize },

    #[error("dot leaves the sensor: center ({x:.1},{y:.1}) with margin {margin:.1} px")]
    BlobOutOfBounds { x: f64, y: f64, margin: f64 },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

//! One error enum for the whole library; the CLI maps variants onto exit codes.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    /// File does not start with the `SFR1` magic bytes.
    #[error("bad magic: not an SFR1 file")]
    BadMagic,

    /// Structurally invalid header (zero dimension, bad channel count, unknown flags).
    #[error("bad header: {0}")]
    BadHeader(String),

    /// Header dimensions multiply out beyond what can be addressed.
    #[error("dimension overflow: {height} x {width} x {channels} channels")]
    DimensionOverflow {
        height: u64,
        width: u64,
        channels: u64,
    },

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: u64, found: u64 },

    #[error("trailing data: {extra} bytes past the declared payload")]
    TrailingData { extra: u64 },

    /// A pixel value is NaN or infinite.
    #[error("non-finite value at flat index {index}")]
    NonFinite { index: usize },

    /// A validity mask is malformed (wrong length or entries other than 0/1).
    #[error("bad validity mask: {0}")]
    BadMask(String),

    #[error("shape mismatch: expected {expected_height}x{expected_width}, got {height}x{width}")]
    ShapeMismatch {
        expected_height: usize,
        expected_width: usize,
        height: usize,
        width: usize,
    },

    /// A pixel coordinate lies outside the grid.
    #[error("pixel ({row}, {col}) out of bounds")]
    OutOfBounds { row: usize, col: usize },

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("duplicate sensor at ({row}, {col})")]
    DuplicateSensor { row: usize, col: usize },

    #[error("sensor set is empty")]
    EmptySensorSet,

    #[error("sensor at ({row}, {col}) sits on a masked-out pixel")]
    SensorOffValid { row: usize, col: usize },

    /// Sensor value list does not line up with the location list.
    #[error("sensor set has {sensors} locations but {values} values")]
    ValueCountMismatch { sensors: usize, values: usize },

    /// Normalizer was asked about a channel kind it was never fitted for.
    #[error("no normalization scale for kind {0:?}")]
    UnknownScaleKind(String),

    /// A scaled channel kind was all zero over the training set.
    #[error("normalization scale for kind {0:?} would be zero")]
    ZeroScale(String),

    #[error("empty training set")]
    EmptyTrainingSet,

    /// Training produced a non-finite loss.
    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Divergence { epoch: usize, loss: f64 },

    /// Relative error against an all-zero reference is undefined.
    #[error("zero truth norm: relative error undefined")]
    ZeroTruthNorm,

    /// A masked reduction saw an empty mask.
    #[error("mask selects no pixels")]
    EmptyMask,

    /// Malformed persisted artifact (normalizer file, checkpoint, manifest).
    #[error("parse error: {0}")]
    Parse(String),

    /// Catch-all precondition violation.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

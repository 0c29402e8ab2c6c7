use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch { expected: (usize, usize), actual: (usize, usize) },
    #[error("interval [{start}, {end}) lies outside the stream range [{range_start}, {range_end}]")]
    IntervalOutOfRange { start: u64, end: u64, range_start: u64, range_end: u64 },
    #[error("event stream is not sorted by timestamp (index {0})")]
    UnsortedStream(usize),
    #[error("event stream is empty")]
    EmptyStream,
    #[error("camera is inside primitive {0}")]
    CameraInsidePrimitive(usize),
    #[error("non-positive brightness {value} at pixel ({x}, {y})")]
    NonPositiveBrightness { x: usize, y: usize, value: f64 },
    #[error("not enough points: need at least {needed}, got {got}")]
    NotEnoughPoints { needed: usize, got: usize },
    #[error("degenerate point configuration: {0}")]
    Degenerate(String),
    #[error("tracking failed on chunk {chunk}: loss grew from {initial} to {last}")]
    TrackingFailure { chunk: usize, initial: f64, last: f64 },
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

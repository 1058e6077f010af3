use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("not a binary PGM: expected magic \"P5\"")]
    BadMagic,
    #[error("malformed PGM header: {0}")]
    MalformedHeader(String),
    #[error("PGM maxval {0} unsupported (must be 1..=255)")]
    MaxvalUnsupported(u32),
    #[error("truncated PGM pixel data: expected {expected} bytes, found {found}")]
    TruncatedData { expected: usize, found: usize },

    #[error("image data length {len} does not match {width}x{height}")]
    DimensionMismatch { width: usize, height: usize, len: usize },
    #[error("invalid resize {src_w}x{src_h} -> {dst_w}x{dst_h}: {reason}")]
    InvalidResize {
        src_w: usize,
        src_h: usize,
        dst_w: usize,
        dst_h: usize,
        reason: &'static str,
    },
    #[error("image {width}x{height} too small to build a pyramid level")]
    PyramidTooSmall { width: usize, height: usize },

    #[error("unsupported patch radius {0} (only 15 is supported)")]
    UnsupportedRadius(u32),
    #[error("coordinate ({x}, {y}) violates the patch margin of a {width}x{height} image")]
    MarginViolation { x: usize, y: usize, width: usize, height: usize },
    #[error("word length {0} out of range 1..=20")]
    WordLengthOutOfRange(u32),
    #[error("moment magnitude {0} does not fit in 20 bits")]
    MomentOverflow(i64),
    #[error("empty moment sample set")]
    EmptySamples,

    #[error("pattern must contain at least one pair")]
    EmptyPattern,
    #[error("descriptor length mismatch: {0} vs {1} bits")]
    DescriptorLengthMismatch(usize, usize),

    #[error("pixel pushed after end of frame")]
    PushAfterEndOfFrame,
}

use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("pixel ({x}, {y}) outside {width}x{height} sensor")]
    OutOfBounds {
        x: u32,
        y: u32,
        width: u16,
        height: u16,
    },
    #[error("inconsistent ISI sequence: {0}")]
    Inconsistent(String),
    #[error("invalid dimensions: {0}")]
    Dimensions(String),
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },
    #[error("unsupported format version {0}")]
    Version(u8),
    #[error("truncated input: {0}")]
    Truncated(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("distance undefined for empty ISI sequence")]
    UndefinedDistance,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("payload checksum mismatch: header {expected:#010x}, payload {found:#010x}")]
    Checksum { expected: u32, found: u32 },
    #[error("malformed payload at byte {offset}: {reason}")]
    Decode { offset: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

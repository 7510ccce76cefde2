//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A tensor or batch had the wrong shape for the requested operation.
    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    ShapeMismatch {
        context: &'static str,
        expected: String,
        actual: String,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("empty batch")]
    EmptyBatch,

    /// Training produced a non-finite loss or gradient.
    #[error("training diverged at iteration {iteration}: {detail}")]
    Diverged { iteration: u64, detail: String },

    #[error("decode error: {0}")]
    Decode(#[from] DecodeError),

    /// Rate-distortion curves whose PSNR ranges do not overlap.
    #[error("no PSNR overlap between curves: anchor spans [{anchor_lo:.3}, {anchor_hi:.3}] dB, test spans [{test_lo:.3}, {test_hi:.3}] dB")]
    NoPsnrOverlap {
        anchor_lo: f64,
        anchor_hi: f64,
        test_lo: f64,
        test_hi: f64,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("image error: {0}")]
    Image(String),
}

/// Bitstream decode failures, kept distinct so callers can report precisely
/// which contract was broken.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("bad magic: expected \"INRB\", got {got:02x?}")]
    BadMagic { got: [u8; 4] },

    #[error("unsupported bitstream version {got} (supported: {supported})")]
    VersionMismatch { got: u8, supported: u8 },

    #[error("truncated header: need {needed} bytes, got {got}")]
    TruncatedHeader { needed: usize, got: usize },

    #[error("truncated payload: need {needed} bytes after the header, got {got}")]
    TruncatedPayload { needed: usize, got: usize },

    #[error("invalid header field {field}: {detail}")]
    InvalidField { field: &'static str, detail: String },
}

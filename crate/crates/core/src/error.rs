use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("index {index} out of range for a {bits}-bit code")]
    IndexOutOfRange { index: u64, bits: u32 },

    #[error("{bits} bits exceeds the cap of {cap}")]
    TooManyBits { bits: u32, cap: u32 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("value {0} lies outside the data domain [-1, 1]")]
    OutOfDomain(f64),

    #[error("nonpositive loss {value} at epoch {epoch}")]
    NonPositiveLoss { epoch: usize, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

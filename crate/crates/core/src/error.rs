use alloc::string::String;

/// Errors raised by the dyadic toolkit.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("scale {scale} outside the supported range [{min}, {max}]", min = crate::K_MIN, max = crate::K_MAX)]
    ScaleOutOfRange { scale: i64 },
    #[error("interval index overflows at scale {scale}")]
    IndexOverflow { scale: i32 },
    #[error("{inner} is not a strict subinterval of {outer}")]
    NotStrictSubinterval { inner: String, outer: String },
    #[error("pieces {first} and {second} overlap")]
    OverlappingPieces { first: String, second: String },
    #[error("non-finite value {value} at {at}")]
    NonFinite { at: String, value: f64 },
    #[error("invalid parameter: requires {constraint} (got {got})")]
    InvalidParameter {
        constraint: &'static str,
        got: String,
    },
    #[error("step function expands to {pieces} base-scale pieces, above the limit of {limit}")]
    TooManyPieces { pieces: u128, limit: u128 },
    #[error("square coefficient routes disagree at {at}: {pipeline} vs {formula}")]
    CoefficientMismatch {
        at: String,
        pipeline: f64,
        formula: f64,
    },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(constraint: &'static str, got: impl core::fmt::Display) -> Error {
    Error::InvalidParameter {
        constraint,
        got: alloc::format!("{got}"),
    }
}

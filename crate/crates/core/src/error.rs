use thiserror::Error;

/// Errors produced by this crate.
#[derive(Debug, Error, Clone, PartialEq)]
#[non_exhaustive]
pub enum Error {
    #[error("precision must be in 1..=53, got {0}")]
    InvalidPrecision(u32),

    #[error("numerator {numerator} out of range for precision {precision}")]
    NumeratorOutOfRange { numerator: u64, precision: u32 },

    #[error("entropy source failure: {0}")]
    Entropy(String),

    #[error("argument must be finite, got {0}")]
    NonFinite(f64),

    #[error("rounding step must be positive and finite, got {0}")]
    InvalidStep(f64),

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("value {0} outside the domain of the inverse CDF")]
    Domain(f64),

    #[error("{0} has no affine standardization")]
    Unsupported(&'static str),

    #[error("cos(2*pi*u2) vanishes at u2 = {0}")]
    UndefinedLevelCurve(f64),

    #[error("candidate set is empty")]
    EmptyCandidates,

    #[error("oracle has a cached Box-Muller value at the first query")]
    PhaseMisaligned,

    #[error("precision {0} exceeds the brute-force limit of {max}", max = crate::attack::MAX_BRUTE_FORCE_PRECISION)]
    TooExpensive(u32),

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("sample variance is zero")]
    DegenerateSample,

    #[error("divisibility must be at least 1")]
    InvalidDivisibility,

    #[error("unknown method `{0}`")]
    UnknownMethod(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

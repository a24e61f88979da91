use thiserror::Error;

/// Errors raised by the simulation and verification routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} must be nondecreasing")]
    NonMonotone { what: &'static str },

    #[error("vector is not constant on block {block} of the partition")]
    NotConstantOnBlock { block: usize },

    #[error("{what}: expected length {expected}, found {found}")]
    LengthMismatch { what: &'static str, expected: usize, found: usize },

    #[error("need at least two box boundaries, got {0}")]
    TooFewBoundaries(usize),

    #[error("box boundaries must not decrease")]
    DecreasingBoundaries,

    #[error("{what} must lie on the {expected} lattice")]
    WrongLattice { what: &'static str, expected: &'static str },

    #[error("indicator array has {0} bits, more than the supported maximum")]
    TooManyBits(usize),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("categorical samples have different alphabets ({0} vs {1})")]
    AlphabetMismatch(u128, u128),

    #[error("sample of size {found} is below the minimum of {min}")]
    SampleTooSmall { found: u64, min: u64 },

    #[error("pooling left {0} cell(s); a two-sample test needs at least 2")]
    TooFewCells(usize),

    #[error("intervals must be increasing and pairwise disjoint")]
    OverlappingIntervals,

    #[error("birth time {birth} lies outside [0, {horizon}]")]
    BirthOutsideHorizon { birth: f64, horizon: f64 },

    #[error("particle index {index} out of range for {len} particles")]
    IndexOutOfRange { index: usize, len: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

use thiserror::Error;

/// Errors raised by the covering, shape and statistics routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,

    #[error("invalid tolerance: {0}")]
    InvalidTolerance(f64),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension must be at least 1")]
    ZeroDimension,

    #[error("non-finite coordinate in point {0}")]
    NonFinite(u64),

    #[error("duplicate point id {0}")]
    DuplicateId(u64),

    #[error("points not covered by any candidate box: {0:?}")]
    OrphanPoints(Vec<u64>),

    #[error("invalid k: {0}")]
    InvalidK(usize),

    #[error("invalid shifting parameter l: {0}")]
    InvalidShift(usize),

    #[error("shifting implemented for d=2 only (got d={0})")]
    ShiftDimension(usize),

    #[error("size cap exceeded: {0}")]
    SizeCap(String),

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("topology mismatch: {0}")]
    TopologyMismatch(String),

    #[error("invalid landmark index {index} (valid range 0..{len})")]
    InvalidLandmark { index: usize, len: usize },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid measurement spec: {0}")]
    InvalidSpec(String),

    #[error("unknown member id {0}")]
    UnknownMember(u64),

    #[error(
        "box {0} is too sparse or off-center for a plain Procrustes mean; \
         enable extrapolation to synthesize substitute shapes"
    )]
    ExtrapolationRequired(usize),

    #[error("underdetermined feature map: need at least {needed} subjects, got {got}")]
    Underdetermined { needed: usize, got: usize },

    #[error("not enough samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("covariance is not positive semi-definite (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("degenerate ellipsoid: covariance is singular")]
    DegenerateEllipsoid,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

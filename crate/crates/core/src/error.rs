use thiserror::Error;

/// Errors raised by the lab. Messages quote the violated precondition.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("cube below resolution")]
    CubeBelowResolution,
    #[error("radius below resolution")]
    RadiusBelowResolution,
    #[error("radius exceeds domain")]
    RadiusExceedsDomain,
    #[error("net too coarse: step {step} exceeds {limit}")]
    NetTooCoarse { step: f64, limit: f64 },
    #[error("insufficient radial resolution")]
    InsufficientRadialResolution,
    #[error("invalid weight")]
    InvalidWeight,
    #[error("invalid exponent: {0}")]
    InvalidExponent(String),
    #[error("exponents outside region")]
    OutsideRegion,
    #[error("overlapping bad cubes")]
    OverlappingCubes,
    #[error("missing m-sets")]
    MissingMSets,
    #[error("empty lacunary range")]
    EmptyRange,
    #[error("threshold must exceed 1")]
    ThresholdTooSmall,
    #[error("mismatched grids")]
    GridMismatch,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("resolution violation: {0}")]
    Resolution(String),
    #[error("fewer than {needed} samples")]
    TooFewSamples { needed: usize },
    #[error("translation must be a lattice vector")]
    NotLatticeVector,
    #[error("io: {0}")]
    Io(String),
    #[error("format: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Format(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

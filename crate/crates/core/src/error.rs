use thiserror::Error;

use crate::hamming::Point;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate weights: all weights are zero")]
    DegenerateWeights,

    #[error(
        "invalid weight {value} at coordinate {index}: weights must be finite and nonnegative"
    )]
    InvalidWeight { index: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("symbol {symbol} out of range at coordinate {index} (alphabet size {size})")]
    SymbolOutOfRange {
        index: usize,
        symbol: usize,
        size: usize,
    },

    #[error("empty set has infinite distance")]
    EmptySet,

    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("outcome count {count} exceeds the enumeration cap {cap}")]
    CapExceeded { count: u128, cap: u64 },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{bound}: t = {t} is outside the validity region")]
    OutsideValidity { bound: &'static str, t: f64 },

    #[error("weights must be normalized: the bounds require ||alpha|| = 1 (got {norm})")]
    NotNormalized { norm: f64 },

    #[error("{0} requires independent coordinates (product distribution)")]
    RequiresIndependence(&'static str),

    #[error(
        "ordered pair count {pairs} exceeds the exhaustive budget {budget}; use sampled or neighbour mode"
    )]
    PairBudgetExceeded { pairs: u128, budget: u64 },

    #[error("functional has no coordinate-drop family")]
    MissingDropFamily,

    #[error("functional has no self-bounding parameters")]
    MissingSelfBoundingParams,

    #[error("Lipschitz condition violated between {0} and {1}")]
    LipschitzViolated(Point, Point),

    #[error("coordinate-drop condition violated at {point} for coordinate {coordinate}")]
    DropConditionViolated { point: Point, coordinate: usize },

    #[error("scenario target does not match the requested verification: {0}")]
    WrongTarget(&'static str),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid scenario file: {0}")]
    Schema(String),

    #[error("scenario key `{key}`: {source}")]
    AtKey {
        key: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// The underlying error, without scenario key context.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtKey { source, .. } => source.root(),
            other => other,
        }
    }
}

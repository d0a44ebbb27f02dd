use thiserror::Error;

use crate::sft::Symbol;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure kinds shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("alphabet must contain at least one symbol")]
    EmptyAlphabet,
    #[error("alphabet of {0} symbols exceeds the supported maximum of 256")]
    TooManySymbols(usize),
    #[error("transition matrix row {row} has {len} entries, expected {expected}")]
    NotSquare { row: usize, len: usize, expected: usize },
    #[error("transition matrix entry at ({row}, {col}) must be 0 or 1, found {value}")]
    NotBoolean { row: usize, col: usize, value: i64 },
    #[error("symbol {0} has no allowed successor")]
    ZeroRow(usize),
    #[error("symbol {0} has no allowed predecessor")]
    ZeroColumn(usize),
    #[error("transition graph is not strongly connected: no path from {from} to {to}")]
    NotTransitive { from: usize, to: usize },
    #[error("symbol {symbol} is outside the alphabet of size {size}")]
    SymbolOutOfRange { symbol: Symbol, size: usize },
    #[error("transition {from} -> {to} at position {position} is forbidden")]
    ForbiddenTransition { from: Symbol, to: Symbol, position: usize },
    #[error("periodic part of a point must be nonempty")]
    EmptyCycle,
    #[error("epsilon must be positive and finite, got {0}")]
    NonPositiveEpsilon(f64),
    #[error("invalid length {0}: must be at least 1")]
    InvalidLength(usize),
    #[error("function depth must be at least 1")]
    ZeroDepth,
    #[error("table of {entries} entries for depth {depth} exceeds the dense-table limit")]
    DepthTooLarge { depth: usize, entries: u128 },
    #[error("no value supplied for admissible word {0:?}")]
    IncompleteTable(Vec<Symbol>),
    #[error("word {0:?} has the wrong length or is not admissible")]
    InvalidWord(Vec<Symbol>),
    #[error("function of depth {function} cannot be integrated against a measure on {measure}-blocks")]
    DepthMismatch { function: usize, measure: usize },
    #[error("Perron iteration did not converge after {iterations} iterations")]
    EigenNotConverged { iterations: usize },
    #[error("transition row {row} is not stochastic on allowed transitions")]
    NotStochastic { row: usize },
    #[error("enumeration needs {needed} items, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },
    #[error("roof function must be positive, minimum is {0}")]
    NonPositiveRoof(f64),
    #[error("time must be nonnegative, got {0}")]
    NegativeTime(f64),
    #[error("height {height} is outside the fiber [0, {roof})")]
    InvalidHeight { height: f64, roof: f64 },
    #[error("scale {xi} exceeds {threshold}: roof distortion is not controlled at this scale")]
    ScaleTooCoarse { xi: f64, threshold: f64 },
    #[error("at least one orbit segment is required")]
    EmptySegments,
    #[error("lap numbers of glued and prescribed orbits differ by {0} at junction")]
    LapMisaligned(i64),
    #[error("could not bracket the root of the pressure equation")]
    BracketNotFound,
    #[error("value {s} is outside the feasible range ({min}, {max})")]
    OutsideFeasibleRange { s: f64, min: f64, max: f64 },
    #[error("Birkhoff evaluation needs {needed} symbols, sampled horizon is {horizon}")]
    HorizonTooShort { needed: usize, horizon: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    /// True for failures of a numerical procedure, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::EigenNotConverged { .. }
                | Error::BracketNotFound
                | Error::BudgetExceeded { .. }
                | Error::LapMisaligned(_)
                | Error::HorizonTooShort { .. }
        )
    }
}

use thiserror::Error;

use crate::lp::LpError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("symbol {symbol} is out of range for an alphabet of size {alphabet}")]
    SymbolOutOfRange { symbol: u32, alphabet: u8 },

    #[error("alphabet size must be in 2..=10, got {0}")]
    BadAlphabet(u32),

    #[error("invalid word `{0}`")]
    InvalidWord(String),

    #[error("invalid point `{text}`: {reason}")]
    InvalidPoint { text: String, reason: String },

    #[error("{what} needs {needed} entries, above the configured cap of {cap}")]
    ResourceCap { what: &'static str, needed: u128, cap: u128 },

    #[error("unknown x-label `{0}`")]
    UnknownLabel(String),

    #[error("cell is incompatible with the cost: {0}")]
    IncompatibleCell(String),

    #[error("measure is not stationary (residual {residual:e} > tolerance {tolerance:e})")]
    NotStationary { residual: f64, tolerance: f64 },

    #[error("masses must be non-negative and sum to 1 (sum = {sum})")]
    NotProbability { sum: f64 },

    #[error("cost is not strictly positive: lower bound {lo} on cell pair ({x}, {y})")]
    NonPositiveCost { x: String, y: String, lo: f64 },

    #[error("cost depends on x; expected a y-only potential")]
    NotYOnly,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("linear program {status}")]
    LpStatus { status: &'static str },

    #[error(transparent)]
    Lp(#[from] LpError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use thiserror::Error;

/// Errors raised by the symbolic, spectral and geometric layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("transition matrix must be {expected}x{expected}, got a row of length {got}")]
    NotSquare { expected: usize, got: usize },

    #[error("transition entry ({row},{col}) = {value} is not 0 or 1")]
    BadEntry { row: usize, col: usize, value: f64 },

    #[error("symbol {0} has an all-zero row or column in the transition matrix")]
    RowColZero(usize),

    #[error("alphabet size {0} unsupported (need 2..=255, or 1 for a single-point model)")]
    BadAlphabet(usize),

    #[error("{what} = {requested} exceeds cap {cap}")]
    CapExceeded {
        what: &'static str,
        requested: usize,
        cap: usize,
    },

    #[error("word {0:?} is not admissible")]
    Inadmissible(Vec<u8>),

    #[error("matrix is not invertible (smallest singular value {0:e})")]
    NonInvertible(f64),

    #[error("matrix for symbol {symbol} is not a contraction (largest singular value {alpha1})")]
    NotContracting { symbol: usize, alpha1: f64 },

    #[error("k = {k} outside 0..={max}")]
    BadK { k: usize, max: usize },

    #[error("subshift is not irreducible")]
    Reducible,

    #[error("potential must be negative everywhere (max window value {0})")]
    NonNegativeH(f64),

    #[error("scale r = {r} outside (0, {r0})")]
    ROutOfRange { r: f64, r0: f64 },

    #[error("pressure evaluator increased from {p_lo} at s={s_lo} to {p_hi} at s={s_hi}")]
    NotDecreasing {
        s_lo: f64,
        p_lo: f64,
        s_hi: f64,
        p_hi: f64,
    },

    #[error("pressure at the left end of the domain is negative ({0})")]
    NegativeAtStart(f64),

    #[error("power iteration did not converge after {0} iterations")]
    NotConverged(usize),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by the transport library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("not a Markov generator: {0}")]
    NonMarkovGenerator(String),

    #[error("detailed balance violated at ({x}, {y}): residual {residual:e}")]
    DetailedBalanceViolation { x: usize, y: usize, residual: f64 },

    #[error("measure must be strictly positive and sum to 1: {0}")]
    NonPositiveMeasure(String),

    #[error("density is not normalized: mass {0}")]
    NotNormalized(f64),

    #[error("density has a non-positive entry {value} at state {index}")]
    ZeroDensity { index: usize, value: f64 },

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("right-hand side is not mean-zero: mean {0:e}")]
    NotMeanZero(f64),

    #[error("chain is reducible: kernel of L has dimension {0}")]
    ReducibleChain(usize),

    #[error("negative time {0}")]
    NegativeTime(f64),

    #[error("boundary mass loss on line grid: mass {mass} (deviation {deviation:e})")]
    BoundaryMassLoss { mass: f64, deviation: f64 },

    #[error("rate must be positive, got {0}")]
    NonPositiveRate(f64),

    #[error("bad size: {0}")]
    BadSize(String),

    #[error("product state space too large: {size} > cap {cap}")]
    SizeOverflow { size: usize, cap: usize },

    #[error("infeasible path: continuity residual {0:e}")]
    InfeasiblePath(f64),

    #[error("non-positive density {value} at slice {slice}, state {state}")]
    NonPositiveDensity {
        slice: usize,
        state: usize,
        value: f64,
    },

    #[error("root finding failed: {0}")]
    RootFindFailure(String),

    #[error("degenerate transport map: T' = {slope} at node {node}")]
    DegenerateMap { node: usize, slope: f64 },

    #[error("invalid xi function: {0}")]
    XiDomainError(String),

    #[error("dimension must satisfy n >= 1, got {0}")]
    BadDimension(f64),

    #[error("bad times: s = {s} > t = {t}")]
    BadTimes { s: f64, t: f64 },

    #[error("geodesic quality too low: phi deviation {0}")]
    GeodesicQuality(f64),

    #[error("endpoints are not of product form: {0}")]
    NotProductForm(String),

    #[error("exponent must lie in (1, 2), got {0}")]
    BadExponent(f64),

    #[error("solver stopped after {iterations} iterations with gradient norm {gradient_norm:e}")]
    NonConvergence {
        iterations: usize,
        gradient_norm: f64,
    },

    #[error("bad parameters: {0}")]
    BadParameters(String),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("prime mismatch: {0} vs {1}")]
    PrimeMismatch(u64, u64),
    #[error("geometry mismatch: {0} vs {1}")]
    GeometryMismatch(String, String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("polynomial is not homogeneous: term {term} has degree {got}, expected {expected}")]
    NotHomogeneous { term: usize, expected: u32, got: u32 },
    #[error("polynomial is not elliptic: {0}")]
    NotElliptic(String),
    #[error("ellipticity undecided at depth {0}")]
    Inconclusive(u32),
    #[error("tolerance {0:e} is below what double precision can deliver")]
    ToleranceUnreachable(f64),
    #[error("window too small: {0}")]
    WindowTooSmall(String),
    #[error("translation leaves the window: {0}")]
    OutsideWindow(String),
    #[error("order {requested} exceeds n_max = {n_max}")]
    OrderTooHigh { requested: usize, n_max: usize },
    #[error("partition expansion of order {0} exceeds the guard of 12")]
    TooManyPartitions(usize),
    #[error("expansion point {z0} differs from E(Phi) = {mean}")]
    ExpansionPoint { z0: String, mean: String },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

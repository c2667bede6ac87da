use thiserror::Error;

/// Which half of a channel pair a symbol belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Bob,
    Willie,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Side::Bob => f.write_str("bob"),
            Side::Willie => f.write_str("willie"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is empty")]
    Empty,
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPsd(f64),
    #[error("trace is {0:.12} instead of 1")]
    TraceNotOne(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("dimension {dim} exceeds the cap of {cap} (set CQCOVERT_DIM_CAP to raise it)")]
    DimensionCapExceeded { dim: usize, cap: usize },
    #[error("support condition violated: {0}")]
    SupportViolation(String),
    #[error("classical support condition violated: {0}")]
    SupportViolationClassical(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid {side} state for symbol {symbol}: {source}")]
    Validation {
        side: Side,
        symbol: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("invalid POVM: {0}")]
    InvalidPovm(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("alpha = {0} is outside [0, 1)")]
    AlphaOutOfRange(f64),
    #[error("alpha = {alpha} exceeds the expansion radius {radius}")]
    AlphaOutOfRadius { alpha: f64, radius: f64 },
    #[error("index mismatch: {0}")]
    IndexMismatch(String),
    #[error("no leakage: symbol {0} has Willie support inside the innocent support")]
    NoLeakage(usize),
    #[error("wrong regime: expected {expected}, channel is {found}")]
    WrongRegime { expected: String, found: String },
    #[error("chi-squared distance to the innocent state vanishes")]
    ZeroChiSquared,
    #[error("every Willie state equals the innocent state")]
    DegenerateChannel,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

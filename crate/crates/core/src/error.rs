use thiserror::Error;

/// Errors raised by the solver and its diagnostics.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("shape mismatch: expected {expected} values, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("Hermitian symmetry violated (defect {defect:.3e}, tolerance {tolerance:.3e})")]
    SymmetryViolated { defect: f64, tolerance: f64 },

    #[error("unsupported Lebesgue exponent p = {0}")]
    UnsupportedExponent(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: symbol has dim {symbol}, field has dim {field}")]
    DimensionMismatch { symbol: usize, field: usize },

    #[error("CFL violation at t = {t}: dt = {dt} exceeds {limit} (max |u| = {max_velocity})")]
    CflViolation {
        t: f64,
        dt: f64,
        limit: f64,
        max_velocity: f64,
    },

    #[error("blow-up detected at t = {t}: sup|theta| = {linf:.3e} exceeds {threshold:.3e}")]
    BlowUp { t: f64, linf: f64, threshold: f64 },

    #[error("tangent vectors numerically dependent (pivot {pivot:.3e} at index {index})")]
    RankCollapse { index: usize, pivot: f64 },

    #[error("tangent set not orthonormal (Gram deviation {0:.3e})")]
    NotOrthonormal(f64),

    #[error("record does not cover the requested horizon: {0}")]
    HorizonExceeded(String),

    #[error("empty sample set")]
    EmptySet,

    #[error("malformed ASCL data: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

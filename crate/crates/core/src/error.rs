use thiserror::Error;

/// Every fallible operation in the crate reports one of these.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point {point} lies outside the domain [{lo}, {hi}]")]
    OutOfDomain { point: f64, lo: f64, hi: f64 },

    #[error("series tail could not be certified below {tol:e} (best bound {bound:e} at N = {n})")]
    TailNotControlled { tol: f64, bound: f64, n: usize },

    #[error("matrix is not positive semidefinite (pivot {pivot:e} at row {row})")]
    NotPsd { row: usize, pivot: f64 },

    #[error("bad exponent: {0}")]
    BadExponent(String),

    #[error("exact mode supports at most {max} points per axis, got {got}")]
    TooLargeForExact { max: usize, got: usize },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("series diverges: {0}")]
    Diverges(String),

    #[error("quadrature failed: {0}")]
    QuadratureFailed(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("conditioning matrix is singular")]
    SingularConditioning,

    #[error("cannot classify model: {0}")]
    UnknownKind(String),

    #[error("model is not of stationary-increment form: {0}")]
    NotStationary(String),

    #[error("Monte Carlo noise dominates: relative standard error {rel_se:.3} at x = {x}")]
    McNoiseDominates { x: f64, rel_se: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<toml::de::Error> for Error {
    fn from(e: toml::de::Error) -> Self {
        Error::Config(e.to_string())
    }
}

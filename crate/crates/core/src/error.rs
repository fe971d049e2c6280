use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("argument must be nonnegative, got {0}")]
    NegativeArgument(String),

    #[error("weight rule returned a non-finite log-weight at index {index}")]
    NonFiniteWeight { index: String },

    #[error("invalid weight parameter: {0}")]
    InvalidWeight(String),

    #[error("cannot parse weight spec `{spec}`: {reason}")]
    WeightSpec { spec: String, reason: String },

    #[error("cannot parse index `{0}`")]
    IndexParse(String),

    #[error("witness schedule starts at k = 1, got k = {0}")]
    WitnessOrder(u32),

    #[error("witness index for k = {0} exceeds the supported size")]
    WitnessTooLarge(u32),

    #[error("no analytic derivative bound for {0} weights")]
    NoAnalyticTail(&'static str),

    #[error("coefficient for b_{index} overflows f64 (log magnitude {log_magnitude}); use the log-domain diagnostics")]
    CoefficientOverflow { index: i64, log_magnitude: f64 },

    #[error("index {0} is outside the i64 range supported by finitely-supported vectors")]
    IndexRange(String),

    #[error("weight sequence is not symmetric: log v_{index} != log v_{neg}", neg = -index)]
    Asymmetric { index: i64 },

    #[error("{0}")]
    Precondition(String),

    #[error("subspace threshold is ambiguous: an eigenvalue modulus is within {tol:e} of c = {c}")]
    Ambiguous { c: f64, tol: f64 },

    #[error("certificate inconsistency: {0}")]
    Inconsistent(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("resolution {resolution} is too small: {reason}")]
    ResolutionTooSmall { resolution: usize, reason: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("coefficient rule `{rule}` requires {what}")]
    MissingAuxiliary { rule: &'static str, what: &'static str },

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("no discrete eigenvalue below the essential band [{m}, {big_m}]")]
    NoPrincipalEigenvalue { m: f64, big_m: f64 },

    #[error("eigenvalue {value} is not simple (gap {gap:e} below tolerance {tol:e})")]
    NotSimple { value: f64, gap: f64, tol: f64 },

    #[error("eigenvalue {value} lies inside the essential band [{m}, {big_m}]")]
    InsideBand { value: f64, m: f64, big_m: f64 },

    #[error("embedding is not injective on the node set (min separation {separation:e})")]
    NotInjective { separation: f64 },

    #[error("branch tracking ambiguous at t = {t}: overlaps {first} and {second}")]
    AmbiguousBranch { t: f64, first: f64, second: f64 },

    #[error("eigenvalue crossing detected inside the step bracket at t = {t}")]
    EigenvalueCrossing { t: f64 },

    #[error("solvability condition violated: <u0, f_V> = {value:e} exceeds {tol:e}")]
    Solvability { value: f64, tol: f64 },

    #[error("linear solve failed: {0}")]
    SingularSystem(String),

    #[error("function violates its declared monotonicity: {0}")]
    Monotonicity(String),
}

pub type Result<T> = std::result::Result<T, Error>;

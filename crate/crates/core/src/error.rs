use thiserror::Error;

/// Errors raised by the algebra, field, geodesic and H4 routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("basis mismatch: `{left}` vs `{right}`")]
    BasisMismatch { left: String, right: String },

    #[error("operands refer to different structure constants")]
    AlgebraMismatch,

    #[error("point {point:?} lies outside the domain")]
    OutOfDomain { point: Vec<f64> },

    #[error("element is a divisor of zero (|det M| = {det:e})")]
    ZeroDivisor { det: f64 },

    #[error("q-tensor is singular; the invariant derivative is undefined")]
    SingularQ,

    #[error("singular matrix in {0}")]
    SingularMatrix(&'static str),

    #[error("algebra has no unit element")]
    NoUnit,

    #[error("cone condition violated: component {component} = {value}")]
    ConeExit { component: usize, value: f64 },

    #[error("indicatrix constraint violated at start: relative residual {residual:e} > {tol:e}")]
    ConstraintViolated { residual: f64, tol: f64 },

    #[error("non-positive value {value} for {what}")]
    NonPositive { what: &'static str, value: f64 },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

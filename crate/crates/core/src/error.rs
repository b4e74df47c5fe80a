use crate::expr::ExprError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    /// Metric at a sample point does not have signature (-,+,...,+).
    #[error("signature violation at {point:?}: eigenvalues {eigenvalues:?}")]
    Signature { point: Vec<f64>, eigenvalues: Vec<f64> },
    #[error("expected {expected} coordinates, got {got}")]
    CoordinateCount { expected: usize, got: usize },
    #[error("degenerate metric at {0:?}")]
    Degenerate(Vec<f64>),
    #[error("synthetic dimension N = {0} coincides with the chart dimension")]
    ExcludedDimension(f64),
    #[error("{what} requires n >= {min}, got n = {n}")]
    DimensionTooSmall { what: &'static str, min: usize, n: usize },
    #[error("expected a {expected} vector, got {got}")]
    WrongCausalType { expected: &'static str, got: &'static str },
    #[error("zero vector")]
    ZeroVector,
    #[error("model '{0}' is not a twisted or warped product")]
    NotProduct(String),
    #[error("step size underflow at parameter {param} (point {point:?})")]
    StepUnderflow { param: f64, point: Vec<f64> },
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, GeometryError>;

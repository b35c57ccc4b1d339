use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the region where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A rate estimate sits on the boundary of [0, 1] (or a standard error is zero).
    #[error("boundary estimate: {0}")]
    Boundary(String),

    #[error("restricted MLE failed to converge at theta0={theta0}: last iterate {last}, score residual {residual:e}")]
    Convergence { theta0: f64, last: f64, residual: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("probability {value} outside the attained range [{min}, {max}]")]
    OutOfRange { value: f64, min: f64, max: f64 },

    #[error("values not monotone at index {index} (violation {violation:e})")]
    NotMonotone { index: usize, violation: f64 },

    #[error("degenerate mass: {0}")]
    DegenerateMass(String),

    #[error("elicited variance leaves no information for the active arm (denominator {denominator:e})")]
    ElicitationTooPrecise { denominator: f64 },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("schema error at line {line}: {message}")]
    Schema { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn schema(line: usize, message: impl Into<String>) -> Self {
        Error::Schema {
            line,
            message: message.into(),
        }
    }
}

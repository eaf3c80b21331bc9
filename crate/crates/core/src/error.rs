use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// `c` reached the pole of the edge integrand at `1 / lambda_max`.
    #[error("pole: c = {c} is not below 1/lambda_max (margin 1 - lambda_max*c = {margin:e})")]
    Pole { c: f64, margin: f64 },

    #[error("matrix is not positive definite (lambda_min = {lambda_min:e})")]
    NotPositiveDefinite { lambda_min: f64 },

    /// Adaptive ODE stepping could not meet the tolerance.
    #[error("step size collapsed at x = {x} (h = {h:e}); use a smaller integration range or a tighter tolerance")]
    StepCollapse { x: f64, h: f64 },

    #[error("model spec line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

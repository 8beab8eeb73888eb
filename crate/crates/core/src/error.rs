use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate twist: {0}")]
    DegenerateTwist(String),

    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("pole at coincident arguments ({a} vs {b})")]
    PoleAtCoincidence { a: String, b: String },

    #[error("{what} = {value} exceeds the configured cap {cap}")]
    CapExceeded {
        what: &'static str,
        value: usize,
        cap: usize,
    },

    #[error("u-form of the modified Izergin determinant is undefined at z = 1 with n = {n} != m = {m}")]
    FormUndefined { n: usize, m: usize },

    #[error("root set is not on-shell: residual {residual:e} > tolerance {tolerance:e}")]
    NotOnShell { residual: f64, tolerance: f64 },

    #[error("Newton iteration did not converge after {iterations} steps (best residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("singular Jacobian at iteration {iteration}; restart from a different point")]
    SingularJacobian { iteration: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn pole<T: std::fmt::Display>(a: T, b: T) -> Self {
        Error::PoleAtCoincidence {
            a: a.to_string(),
            b: b.to_string(),
        }
    }
}

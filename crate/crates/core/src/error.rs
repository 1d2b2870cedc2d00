use num_complex::Complex64;

/// Errors produced by the numerical layers.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge at y = {y} (estimate {estimate}, error {error:.3e})")]
    Quadrature {
        y: Complex64,
        estimate: Complex64,
        error: f64,
    },

    #[error("fixed point did not converge at z = {z}: residual {residual:.3e} after {iterations} iterations")]
    NoConvergence {
        z: Complex64,
        residual: f64,
        iterations: usize,
        last: Vec<Complex64>,
    },

    #[error("unknown {index} = {value} left its cone at z = {z}")]
    ConeViolation {
        z: Complex64,
        index: usize,
        value: Complex64,
    },

    #[error("continuation broke down at step {index}: {reason}")]
    Continuation { index: usize, reason: String },

    #[error("eigenvalue iteration did not converge for index {index}")]
    EigenNoConvergence { index: usize },

    #[error("extrapolation diverged: {0}")]
    Extrapolation(String),

    #[error("{0}")]
    Format(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

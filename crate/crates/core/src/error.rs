use thiserror::Error;

/// Errors raised by the solvers and estimators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("quadrature construction did not converge for n = {n}")]
    QuadratureFailed { n: usize },

    #[error("degree {n} exceeds the supported maximum {max}")]
    DegreeOverflow { n: usize, max: usize },

    #[error("solution blew up at t = {t:.6} (max |u| = {max_abs:.3e})")]
    BlowUp { t: f64, max_abs: f64 },

    #[error("no bracket: both endpoints classify as {0}")]
    NoBracket(String),

    #[error("no crossing found between loci at t = {t_prev} and t = {t_next}")]
    NoCrossing { t_prev: f64, t_next: f64 },

    #[error("singular linear system: {0}")]
    Singular(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

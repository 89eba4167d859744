use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("quadrature did not converge: achieved {achieved:.3e}, requested {requested:.3e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("frequency {omega} outside rate-table window [{min}, {max}]")]
    OutsideWindow { omega: f64, min: f64, max: f64 },

    #[error("rate-table window [{min}, {max}] does not cover the protocol (needs |omega| <= {needed})")]
    WindowTooSmall { min: f64, max: f64, needed: f64 },

    #[error("step size underflow at t = {t} (eta = {eta})")]
    StepUnderflow { t: f64, eta: Complex64 },

    #[error("non-finite state at t = {t} (eta = {eta})")]
    NonFinite { t: f64, eta: Complex64 },

    #[error("state lost positivity at t = {t}: min eigenvalue {min_eigenvalue:.3e}")]
    Positivity { t: f64, min_eigenvalue: f64 },

    #[error("{} of the counting-field solves failed; first at index {}: {}", .failures.len(), .failures[0].0, .failures[0].1)]
    CfFailures { failures: Vec<(usize, String)> },

    #[error("W range [{w_min}, {w_max}] exceeds the aliasing bound {bound} for this grid")]
    Aliasing { w_min: f64, w_max: f64, bound: f64 },

    #[error("insufficient counting-field resolution: {0}")]
    Resolution(String),

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { field, reason: reason.into() }
    }

    /// True for failures of the numerical machinery (as opposed to bad input or I/O).
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Quadrature { .. }
                | Error::StepUnderflow { .. }
                | Error::NonFinite { .. }
                | Error::Positivity { .. }
                | Error::CfFailures { .. }
        )
    }

    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_) | Error::Csv(_) | Error::Json(_) | Error::Malformed(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by the sampling, quadrature and estimation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input violated a documented precondition. `key` names the offending parameter.
    #[error("invalid {key}: {reason}")]
    Validation { key: &'static str, reason: String },

    /// Adaptive quadrature ran out of subdivisions before meeting its tolerance.
    #[error("quadrature did not converge: value {value}, error estimate {err_est} after {subdivisions} subdivisions")]
    Quadrature {
        value: f64,
        err_est: f64,
        subdivisions: usize,
    },

    /// Too many replications touched the edge of the simulation window.
    #[error("window too small: {flagged} of {total} replications were boundary-contaminated")]
    WindowTooSmall { flagged: usize, total: usize },

    /// A scalar field returned a non-finite value.
    #[error("field evaluation failed at ({x}, {y}): {value}")]
    FieldEvaluation { x: f64, y: f64, value: f64 },

    /// SINR evaluation hit a UE sitting on its serving base station.
    #[error("UE {ue} coincides with the serving base station")]
    SingularPathLoss { ue: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(key: &'static str, reason: impl Into<String>) -> Error {
    Error::Validation {
        key,
        reason: reason.into(),
    }
}

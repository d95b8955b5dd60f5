use thiserror::Error;

/// Errors raised by model evaluation, integration and report assembly.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite {what} ({value})")]
    NonFinite { what: String, value: f64 },

    #[error("point outside model domain: {0}")]
    Domain(String),

    #[error("velocity Hessian is singular (reciprocal condition {rcond:e})")]
    SingularHessian { rcond: f64 },

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: String,
        value: f64,
        reason: String,
    },

    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),

    #[error("unknown system `{0}`")]
    UnknownSystem(String),

    #[error("system `{system}` has no {chart} chart")]
    UnsupportedChart { system: String, chart: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("analytic partials of `{model}` disagree with finite differences: {detail}")]
    PartialsMismatch { model: String, detail: String },

    #[error("trajectory aborted: {0}")]
    Aborted(String),

    #[error("empty trajectory")]
    EmptyTrajectory,

    #[error("all {0} ensemble members aborted")]
    AllAborted(usize),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(what: impl FnOnce() -> String, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite {
            what: what(),
            value,
        })
    }
}

pub(crate) fn ensure_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

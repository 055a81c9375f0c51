use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("no stationary radius: {0}")]
    NoStationaryRadius(String),

    #[error("delay too large: fixed-point iteration did not contract (tau = {tau}, {detail})")]
    DelayTooLarge { tau: f64, detail: String },

    #[error("numerical non-convergence: {0}")]
    NonConvergence(String),

    #[error("radius {radius} fell below the floor at t = {t}")]
    RadiusCollapse { t: f64, radius: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter violates its domain (sign, finiteness, ordering).
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// `k == alpha`: the coexistence point and the cubic extremum are at infinity.
    #[error("degenerate cubic: k equals alpha ({alpha})")]
    DegenerateCubic { alpha: f64 },

    /// Step size fell below the representable resolution of `tau`.
    #[error("integration failed at tau = {tau}: {reason}")]
    IntegrationFailure {
        tau: f64,
        state: Vec<f64>,
        reason: String,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("precondition not met: {0}")]
    Precondition(String),

    /// The simplex search did not converge; carries the best parameters seen.
    #[error("fit did not converge after {restarts} starts (best rss = {best_rss:e})")]
    FitFailure {
        restarts: usize,
        best: [f64; 4],
        best_rss: f64,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be finite and > 0, got {value}"),
        })
    }
}

pub(crate) fn check_non_negative(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be finite and >= 0, got {value}"),
        })
    }
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A radius at or inside the horizon, a non-positive width, and the like.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("quadrature did not reach relative tolerance {tolerance:e} after {panels} panels (last change {last_change:e})")]
    Quadrature {
        tolerance: f64,
        panels: usize,
        last_change: f64,
    },

    #[error("dip not resolved inside the scan (lowest point at index {index} of {len})")]
    EdgeDip { index: usize, len: usize },

    #[error("scan is underdetermined: {0}")]
    Underdetermined(String),

    #[error("dip fit failed to converge: {0}")]
    NoConvergence(String),

    #[error("no plateau points: {0}")]
    InsufficientPlateau(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}

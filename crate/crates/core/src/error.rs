use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("fading model `{0}` is not implemented")]
    UnsupportedFading(String),

    /// The QoS target lies at or above the saturation ceiling, so no
    /// transmit power reaches it. `bound` is the attainable coverage.
    #[error("QoS target {target} is not reachable by power alone (coverage ceiling {bound})")]
    Infeasible { target: f64, bound: f64 },

    #[error("degenerate problem: {0}")]
    Degenerate(String),

    #[error("quadrature did not reach tolerance: estimate {estimate}, error {error}")]
    Quadrature { estimate: f64, error: f64 },

    #[error("root finding failed: {0}")]
    RootFinding(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

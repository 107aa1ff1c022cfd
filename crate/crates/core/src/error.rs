use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid pulse schedule: {0}")]
    InvalidSchedule(String),

    #[error(
        "quadrature did not converge on [{lower}, {upper}]: error estimate {error_estimate:e} \
         exceeds tolerance {tolerance:e}"
    )]
    QuadratureNonConvergence {
        lower: f64,
        upper: f64,
        error_estimate: f64,
        tolerance: f64,
    },

    #[error("rate `{rate}` failed at t = {time}: {source}")]
    RateEvaluation {
        rate: &'static str,
        time: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("step size {step} does not resolve the qubit splitting (h*omega0 = {product} >= 0.5)")]
    StepTooCoarse { step: f64, product: f64 },

    #[error("Hilbert space dimension {dimension} exceeds the limit {limit}")]
    DimensionOverflow { dimension: usize, limit: usize },

    #[error("{0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

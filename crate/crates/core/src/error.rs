use thiserror::Error;

/// Errors raised by the simulation and analysis layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SvieError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical error: {message} (interval [{lower}, {upper}], estimate {estimate}, error {error_estimate}, {evaluations} evaluations)")]
    Quadrature {
        message: String,
        lower: f64,
        upper: f64,
        estimate: f64,
        error_estimate: f64,
        evaluations: usize,
    },

    #[error("state exploded to {value} at grid index {step} (t = {time})")]
    Explosion { step: usize, time: f64, value: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("audit failure: {0}")]
    Audit(String),

    #[error("analysis error: {0}")]
    Analysis(String),
}

pub type Result<T> = std::result::Result<T, SvieError>;

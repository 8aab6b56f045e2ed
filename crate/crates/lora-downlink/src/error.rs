//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the analytical and simulation layers.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of a function.
    #[error("domain error in {function}: {message}")]
    Domain { function: &'static str, message: String },

    /// An iterative evaluation hit its iteration cap. `achieved` carries the
    /// best estimate so callers can report how far the evaluation got.
    #[error("{function} did not converge after {iterations} iterations (best estimate {achieved:e})")]
    Convergence {
        function: &'static str,
        iterations: usize,
        achieved: f64,
    },

    /// A parameter set fails validation.
    #[error("invalid parameters: {0}")]
    Validation(String),

    /// A simulation configuration or run is inconsistent.
    #[error("simulation error: {0}")]
    Simulation(String),
}

impl Error {
    pub fn domain(function: &'static str, message: impl Into<String>) -> Self {
        Error::Domain { function, message: message.into() }
    }
}

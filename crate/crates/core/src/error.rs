use thiserror::Error;

/// Errors raised by the solvers, the diagnostics and the sweep harness.
#[derive(Debug, Error)]
pub enum Error {
    /// Shape or nesting mismatch between grids and grid functions.
    #[error("structural error: {0}")]
    Structural(String),

    /// A time level became non-finite or exceeded the magnitude guard.
    #[error("blow-up detected at step {step} (max |u| = {max_abs:e})")]
    BlowUp { step: usize, max_abs: f64 },

    /// The per-step nonlinear solve hit its iteration limit.
    #[error("nonlinear solve did not converge at step {step} (node {node:?}, residual {residual:e})")]
    NonConvergence {
        step: usize,
        node: Option<usize>,
        residual: f64,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn structural(msg: impl Into<String>) -> Self {
        Error::Structural(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// True for failures of the numerical method itself (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::BlowUp { .. } | Error::NonConvergence { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

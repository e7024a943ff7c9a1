use thiserror::Error;

use crate::thermal::ThermalState;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("simulation fault: {reason} (state: {state:?})")]
    SimulationFault { reason: String, state: Box<ThermalState> },

    #[error("target variance is zero; R² is undefined")]
    UndefinedVariance,

    #[error("internal error: {0}")]
    Internal(String),

    #[error("planner error: {0}")]
    Planner(String),

    #[error("controller warm-up: {have} of {need} lag observations available, seed with RC2 first")]
    WarmUp { have: usize, need: usize },

    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },

    #[error("schema error: missing column `{0}`")]
    MissingColumn(String),

    #[error("model format: {0}")]
    Format(String),

    #[error("comparison error: {0}")]
    Comparison(String),

    #[error("experiment aborted at step {step}: {source}")]
    Aborted {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    /// True for input/validation problems, as opposed to runtime faults.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Argument(_)
                | Error::Parse { .. }
                | Error::MissingColumn(_)
                | Error::Format(_)
                | Error::Comparison(_)
                | Error::Json(_)
                | Error::Csv(_)
                | Error::WarmUp { .. }
        )
    }
}

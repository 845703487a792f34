use thiserror::Error;

/// Errors produced by environment construction, the objective oracle,
/// the algorithms and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// The behavior-induced state chain failed to converge or to mix.
    #[error("ergodicity check failed: {0}")]
    Ergodicity(String),

    /// The feature covariance is (numerically) singular.
    #[error("solvability check failed: minimum eigenvalue of the feature covariance is {lambda_min:e}")]
    Solvability { lambda_min: f64 },

    #[error("invalid state: {0}")]
    State(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("environment '{env}': {source}")]
    Environment {
        env: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors that signal a violated modelling assumption
    /// (ergodicity or solvability), possibly wrapped with an environment label.
    pub fn is_assumption_violation(&self) -> bool {
        match self {
            Error::Ergodicity(_) | Error::Solvability { .. } => true,
            Error::Environment { source, .. } => source.is_assumption_violation(),
            _ => false,
        }
    }

    pub fn is_config_error(&self) -> bool {
        match self {
            Error::Config(_) | Error::Parameter(_) => true,
            Error::Environment { source, .. } => source.is_config_error(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

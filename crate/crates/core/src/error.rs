use thiserror::Error;

/// Errors raised by the model. Variants map onto the CLI exit-code classes:
/// domain/config problems, solver failures and fit failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("network solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    NetworkDivergence { iterations: usize, residual: f64 },

    #[error("operating point did not converge after {iterations} iterations (last gate openings {last:e} m² and {previous:e} m²)")]
    FixedPointDivergence {
        iterations: usize,
        last: f64,
        previous: f64,
    },

    #[error("solver failed at q_in = {q_in_lpm} L/min: {source}")]
    AtFlowRate {
        q_in_lpm: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("fit error: {0}")]
    Fit(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for failures of the numerical solvers, including wrapped ones.
    pub fn is_solver_failure(&self) -> bool {
        match self {
            Error::NetworkDivergence { .. } | Error::FixedPointDivergence { .. } => true,
            Error::AtFlowRate { source, .. } => source.is_solver_failure(),
            _ => false,
        }
    }

    pub fn is_fit_failure(&self) -> bool {
        matches!(self, Error::Fit(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

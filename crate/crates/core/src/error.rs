use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("power flow did not converge after {iterations} iterations (last voltage change {mismatch:.3e} pu)")]
    NonConvergence { iterations: usize, mismatch: f64 },

    #[error("invalid feeder topology: {0}")]
    InvalidTopology(String),

    #[error("invalid feeder model: {0}")]
    InvalidModel(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("stability error: {0}")]
    Stability(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid configuration:\n{}", .0.join("\n"))]
    Config(Vec<String>),

    #[error("scenario {index} at PL {pl}% failed: {source}")]
    Scenario {
        pl: f64,
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

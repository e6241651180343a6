use thiserror::Error;

/// Errors raised while reading or validating a scenario document.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config syntax/schema error: {0}")]
    Syntax(String),
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

impl ConfigError {
    pub(crate) fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Invalid { path: path.into(), message: message.into() }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum RouteError {
    #[error("origin and destination must differ (node {0})")]
    SameEndpoints(u32),
    #[error("node {0} is not part of the topology")]
    UnknownNode(u32),
    #[error("no path from node {origin} to node {destination}")]
    NoPath { origin: u32, destination: u32 },
}

#[derive(Debug, Error, PartialEq)]
pub enum SolverError {
    #[error("rate system has dimension 0")]
    EmptySystem,
    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("stationary vector has a component of {value:e} at index {index}")]
    NegativeProbability { index: usize, value: f64 },
    #[error("singular or ill-conditioned system")]
    Singular,
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("state-space cap of {cap} states exceeded ({reached} states discovered)")]
    StateCapExceeded { cap: usize, reached: usize },
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("confidence interval needs at least {required} batches, got {got}")]
    TooFewBatches { required: usize, got: usize },
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("report i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("report csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("report json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid tolerance spec '{0}'")]
    Tolerance(String),
    #[error("key {0} not present in the compared report")]
    KeyMismatch(String),
    #[error("duplicate key {0} in report")]
    DuplicateKey(String),
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("infeasible capacity: total agent capacity {capacity} < {devices} devices")]
    InfeasibleCapacity { capacity: usize, devices: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("action {action} for device {device} out of range (n_agents = {n_agents})")]
    ActionOutOfRange {
        device: usize,
        action: usize,
        n_agents: usize,
    },

    #[error("non-finite training step: loss = {loss}, gradient norm = {grad_norm}")]
    NonFinite { loss: f64, grad_norm: f64 },

    #[error("run failed for scheme {scheme}, seed {seed}: {source}")]
    Run {
        scheme: String,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

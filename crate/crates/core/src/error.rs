use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("population does not persist: c^2/2 + sigma/2 = {load} >= 1")]
    NonPersistent { load: f64 },

    #[error("time {t} outside the window [0, {horizon}]")]
    OutOfWindow { t: f64, horizon: f64 },

    #[error("exponent {exponent} exceeds the representable range")]
    ExponentOverflow { exponent: f64 },

    #[error("unknown individual id {0}")]
    UnknownId(u32),

    #[error("individual {id} is not alive at t = {t}")]
    NotAlive { id: u32, t: f64 },

    #[error("population is extinct at the horizon (extinction at t = {extinction_time})")]
    ExtinctAtT { extinction_time: f64 },

    #[error("path is already reversed")]
    AlreadyReversed,

    #[error("path is already in forward time")]
    AlreadyForward,

    #[error("time step {dt} violates the explicit reaction bound (max |rate| = {max_rate})")]
    StabilityViolation { dt: f64, max_rate: f64 },

    #[error("density became negative ({value}) at x = {x}")]
    NegativeDensity { x: f64, value: f64 },

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("AR(1) coefficient {rho} is not in (0, 1): data is not mean-reverting")]
    NonContracting { rho: f64 },

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("config: {0}")]
    Config(#[from] toml::de::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field,
        reason: reason.into(),
    }
}

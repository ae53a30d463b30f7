//! Crate-wide error type.

/// Errors produced by model construction, integration, and analysis.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("non-finite input to {0}")]
    NonFinite(&'static str),

    #[error("state became non-finite at t = {t}")]
    BlowUp { t: f64 },

    #[error("t = {t} outside trajectory range [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },

    #[error("no oscillatory instability for lambda = {lambda}, mu = {mu} (lambda <= 2 mu): system stable for all delays")]
    NoOscillation { lambda: f64, mu: f64 },

    #[error("frequency not real at delta = {delta}: outside oscillatory regime")]
    FrequencyNotReal { delta: f64 },

    #[error("no critical delay in oscillatory regime for lambda = {lambda}, mu = {mu}")]
    NoCriticalDelay { lambda: f64, mu: f64 },

    #[error("ambiguous slow-flow stability pattern: {0}")]
    AmbiguousStableSide(String),

    #[error("trajectory too short: {0}")]
    TrajectoryTooShort(String),

    #[error("bracket error: {0}")]
    Bracket(String),

    #[error("negative time t = {0}")]
    NegativeTime(f64),

    #[error("unsupported rate function: {0}")]
    UnsupportedRate(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

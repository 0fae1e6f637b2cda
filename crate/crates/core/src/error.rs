use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("non-finite coefficient at mode (k = {k}, j = {j})")]
    NonFinite { k: i64, j: i64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("time t = {t} is outside the domain of {what}")]
    OutsideRegime { what: &'static str, t: f64 },

    #[error("invalid schedule: {0}")]
    Schedule(String),

    #[error("solution blew up at t = {t}")]
    BlowUp { t: f64 },

    #[error("sampling too coarse: spacing {spacing} exceeds {limit}")]
    CoarseSampling { spacing: f64, limit: f64 },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u32),

    #[error("config: {0}")]
    Config(String),

    #[error("fit: {0}")]
    Fit(String),

    #[error("empty sample")]
    EmptySample,

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

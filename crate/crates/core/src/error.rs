use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("distance must be positive, got {0} m")]
    NonPositiveDistance(f64),

    #[error("spreading factor must be in 7..=12, got {0}")]
    InvalidSpreadingFactor(u8),

    #[error("payload must be at least one byte")]
    EmptyPayload,

    #[error("{0} requires at least one node")]
    NoNodes(&'static str),

    #[error("power level set must hold at least 2 strictly ascending levels")]
    InvalidPowerLevels,

    #[error("transmissions do not overlap")]
    NotOverlapping,

    #[error("received count {received} exceeds sent count {sent}")]
    ReceivedExceedsSent { sent: u64, received: u64 },

    #[error("transmit power {0} dBm is outside the current table")]
    PowerOutsideTable(f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("cannot write to {}: {source}", path.display())]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

use std::path::PathBuf;

/// Errors produced by the simulation, detection and I/O layers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("averaging factor n={n} out of range: maximum valid n for this series is {max_n}")]
    TauOutOfRange { n: usize, max_n: usize },

    #[error("series length mismatch: actual has {actual} epochs, detected has {detected}")]
    LengthMismatch { actual: usize, detected: usize },

    #[error("unknown preset '{0}'; available presets: {1}")]
    UnknownPreset(String, String),

    #[error("{path}: parse error at line {line}: {msg}")]
    TraceParse {
        path: PathBuf,
        line: u64,
        msg: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("wire: datagram has wrong length {0} (expected {expected})", expected = crate::netlab::wire::MESSAGE_LEN)]
    WireLength(usize),

    #[error("wire: bad magic")]
    WireMagic,

    #[error("wire: checksum mismatch")]
    WireChecksum,

    #[error("wire: unknown version {0}")]
    WireVersion(u8),

    #[error("wire: unknown message type {0}")]
    WireMsgType(u8),

    #[error("netlab: {0}")]
    Netlab(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} must be finite, got {v}")))
    }
}

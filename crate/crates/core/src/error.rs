use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },

    #[error("record {signal}: correctness {value} outside [0, 100]")]
    CorrectnessOutOfRange { signal: String, value: f64 },

    #[error("cannot read audio {path}: {message}")]
    Audio { path: PathBuf, message: String },

    #[error("audio {path} has {channels} channel(s); a stereo (2-channel) file is required")]
    Channel { path: PathBuf, channels: u16 },

    #[error("cannot build split: {0}")]
    Split(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("feature backend `{identity}` is unavailable: {hint}")]
    BackendUnavailable { identity: String, hint: String },

    #[error("feature cache {path}: {message}")]
    Cache { path: PathBuf, message: String },

    #[error("missing features for {signal} ({channel}); run extraction first")]
    MissingFeatures { signal: String, channel: String },

    #[error("checkpoint {path}: {message}")]
    Checkpoint { path: PathBuf, message: String },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("{0}")]
    Format(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 configuration, 3 data, 4 numeric fault.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_)
            | Error::BackendUnavailable { .. }
            | Error::Checkpoint { .. }
            | Error::Precondition(_) => 2,
            Error::NonFinite(_) => 4,
            _ => 3,
        }
    }
}

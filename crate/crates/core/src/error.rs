use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("frame mismatch: cloud is in frame `{cloud}` but the transform expects `{expected}`")]
    FrameMismatch { cloud: String, expected: String },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("unknown CAV id {0}")]
    UnknownCav(u32),

    #[error("placement infeasible for {config}: {reason}")]
    InfeasiblePlacement { config: String, reason: String },

    #[error("codec: {0}")]
    Codec(String),

    #[error("missing manifest in {0}")]
    MissingManifest(PathBuf),

    #[error("unsupported format version {found} in {path} (expected {expected})")]
    VersionMismatch {
        path: PathBuf,
        found: u32,
        expected: u32,
    },

    #[error("truncated file {0}")]
    Truncated(PathBuf),

    #[error("checksum mismatch in {0}")]
    Checksum(PathBuf),

    #[error("malformed file {path}: {reason}")]
    Malformed { path: PathBuf, reason: String },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error on {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

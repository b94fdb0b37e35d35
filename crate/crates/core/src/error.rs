use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    RawIo(#[from] std::io::Error),
    #[error("pcap format error: {0}")]
    PcapFormat(String),
    #[error("invalid manifest: {0}")]
    Manifest(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("training failed: {0}")]
    Training(String),
    #[error("schema mismatch: model expects {expected}, got {actual}")]
    SchemaMismatch { expected: String, actual: String },
    #[error("model file: {0}")]
    ModelFormat(String),
    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u32),
    #[error("period {0} has no data")]
    EmptyPeriod(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

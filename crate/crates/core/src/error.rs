use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),

    #[error("token id {id} out of range for vocabulary of size {size}")]
    TokenOutOfRange { id: usize, size: usize },

    #[error("sequence of length {len} exceeds maximum length {max}")]
    TooLong { len: usize, max: usize },

    #[error("gradient supplied for frozen parameter group `{0}`")]
    FrozenGradient(String),

    #[error("missing gradient for trainable parameter group `{0}`")]
    MissingGradient(String),

    #[error("unknown parameter group `{0}`")]
    UnknownGroup(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("frozen base hash mismatch: expected {expected}, found {found}")]
    BaseHashMismatch { expected: String, found: String },

    #[error("training diverged at step {step}: loss is {loss}")]
    Diverged { step: usize, loss: f64 },

    #[error("unknown split name `{0}`")]
    UnknownSplit(String),

    #[error("unknown ablation variant `{0}`")]
    UnknownVariant(String),

    #[error("unknown perspective label `{0}`")]
    UnknownLabel(String),

    #[error("{0}")]
    Data(String),
}

impl Error {
    pub(crate) fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::File {
            path: path.into(),
            source,
        }
    }
}

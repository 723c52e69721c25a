use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors surfaced by every layer of the lab.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("invalid segment table: {0}")]
    Segments(String),

    #[error("segment tables do not match: {0}")]
    SegmentMismatch(String),

    #[error("weight vector has no head segments")]
    NoHead,

    #[error("checkpoint {0} not found in store index")]
    MissingCheckpoint(String),

    #[error("integrity check failed for checkpoint {id}: {detail}")]
    Integrity { id: String, detail: String },

    #[error("malformed checkpoint data: {0}")]
    Format(String),

    #[error("invalid manifest: {0}")]
    Manifest(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("training diverged at step {step}: loss {loss}")]
    Diverged { step: usize, loss: f64 },

    #[error("zero-norm task vector for model {0}")]
    ZeroNorm(String),

    #[error("jacobi eigensolver did not converge: off-diagonal norm {off_norm:e} after {sweeps} sweeps")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {what}: {detail}")]
    Validation { what: &'static str, detail: String },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error(
        "RT60 of {requested:.3} s is unreachable for this room \
         (achievable range {min_rt60:.3} s to {max_rt60:.3} s)"
    )]
    UnreachableRt60 {
        requested: f64,
        min_rt60: f64,
        max_rt60: f64,
    },

    #[error("could not parse caption {text:?}: {reason}")]
    CaptionParse { text: String, reason: String },

    #[error("sample rate mismatch: {0} Hz vs {1} Hz")]
    SampleRateMismatch(u32, u32),

    #[error("length mismatch: {0} vs {1} samples")]
    LengthMismatch(usize, usize),

    #[error("expected {expected} channel(s), found {found}")]
    ChannelCount { expected: usize, found: usize },

    #[error("covariance is not positive semidefinite (eigenvalue {0:e})")]
    NotPositiveSemidefinite(f64),

    #[error("LLM request failed: {0}")]
    Llm(String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Wav(#[from] hound::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn validation(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Validation {
            what,
            detail: detail.into(),
        }
    }
}

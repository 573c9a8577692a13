use std::path::PathBuf;

use crate::types::Tier;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failures raised by a logit or embedding provider.
#[derive(Debug, Clone, thiserror::Error)]
pub enum ProviderError {
    #[error("no fixture entry for item `{item_id}` under ordering `{ordering_name}`")]
    LogitLookup {
        item_id: String,
        ordering_name: String,
    },
    #[error("no fixture embedding for text {text:?}")]
    EmbeddingLookup { text: String },
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("adapter returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed adapter response: {0}")]
    Protocol(String),
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("{}, line {line}: {message}", path.display())]
    Schema {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("insufficient candidates for {tier} distractors of `{target}`: {available} available, 3 required")]
    InsufficientCandidates {
        tier: Tier,
        target: String,
        available: usize,
    },

    #[error("missing {variant} embedding for class `{class_id}`")]
    MissingEmbedding { class_id: String, variant: String },

    #[error(transparent)]
    Provider(#[from] ProviderError),

    #[error("{stage} bias estimation aborted after {completed}/{requested} prompts: {source}")]
    Calibration {
        stage: &'static str,
        completed: usize,
        requested: usize,
        #[source]
        source: ProviderError,
    },

    #[error("provider error rate too high: {failed}/{total} requests failed (first: {})", first_failures.join(", "))]
    ProviderErrorRate {
        failed: usize,
        total: usize,
        first_failures: Vec<String>,
    },

    #[error("configuration mismatch: {0}")]
    ConfigMismatch(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

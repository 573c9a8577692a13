//! Sources of option logits and description embeddings.
//!
//! Every provider answers in presentation-slot order; mapping orderings back
//! to canonical options is the evaluator's job.

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, ProviderError, Result};
use crate::types::{LogitVector, PresentedItem, Variant};

mod fixture;
mod http;
mod synthetic;

pub use fixture::{FixtureEmbeddingRecord, FixtureEmbeddings, FixtureLogits};
pub use http::{wire, HttpConfig, HttpProvider, RetryPolicy, TIMEOUT_ENV};
pub use synthetic::SyntheticProvider;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogitRequest {
    pub item_id: String,
    pub ordering_name: String,
    pub presented: PresentedItem,
}

impl From<PresentedItem> for LogitRequest {
    fn from(presented: PresentedItem) -> Self {
        LogitRequest {
            item_id: presented.item_id.clone(),
            ordering_name: presented.ordering_name.clone(),
            presented,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitRecord {
    pub item_id: String,
    pub ordering_name: String,
    pub logits: LogitVector,
    #[serde(default)]
    pub provider_tag: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency_ms: Option<f64>,
}

pub trait LogitProvider: Send + Sync {
    fn tag(&self) -> &str;

    fn fetch_logits(&self, request: &LogitRequest) -> Result<LogitRecord, ProviderError>;
}

pub trait EmbeddingProvider: Send + Sync {
    fn fetch_embedding(&self, text: &str, variant: Variant) -> Result<Vec<f64>, ProviderError>;
}

/// Parsed `--provider` value: `fixture:PATH`, `http:URL` or `synth:PARAMS_PATH`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProviderSpec {
    Fixture(PathBuf),
    Http(String),
    Synthetic(PathBuf),
}

impl std::str::FromStr for ProviderSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.starts_with("http://") || s.starts_with("https://") {
            return Ok(ProviderSpec::Http(s.to_string()));
        }
        let (kind, rest) = s.split_once(':').ok_or_else(|| {
            Error::validation(format!(
                "provider spec {s:?} must look like fixture:PATH, http:URL or synth:PARAMS_PATH"
            ))
        })?;
        if rest.is_empty() {
            return Err(Error::validation(format!(
                "provider spec {s:?} has an empty target"
            )));
        }
        match kind {
            "fixture" => Ok(ProviderSpec::Fixture(rest.into())),
            "http" => Ok(ProviderSpec::Http(rest.to_string())),
            "synth" => Ok(ProviderSpec::Synthetic(rest.into())),
            other => Err(Error::validation(format!(
                "unknown provider kind {other:?}"
            ))),
        }
    }
}

impl ProviderSpec {
    /// Instantiates a logit provider; `parallelism` bounds in-flight HTTP requests.
    pub fn logit_provider(&self, parallelism: usize) -> Result<Arc<dyn LogitProvider>> {
        Ok(match self {
            ProviderSpec::Fixture(path) => Arc::new(FixtureLogits::load(path)?),
            ProviderSpec::Http(url) => {
                Arc::new(HttpProvider::new(url, HttpConfig::from_env(parallelism)?)?)
            }
            ProviderSpec::Synthetic(path) => Arc::new(SyntheticProvider::load(path)?),
        })
    }

    pub fn embedding_provider(&self, parallelism: usize) -> Result<Arc<dyn EmbeddingProvider>> {
        Ok(match self {
            ProviderSpec::Fixture(path) => Arc::new(FixtureEmbeddings::load(path)?),
            ProviderSpec::Http(url) => {
                Arc::new(HttpProvider::new(url, HttpConfig::from_env(parallelism)?)?)
            }
            ProviderSpec::Synthetic(_) => {
                return Err(Error::validation(
                    "the synthetic provider does not serve embeddings",
                ))
            }
        })
    }
}

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EmbeddingProvider, LogitProvider, LogitRecord, LogitRequest};
use crate::error::{Error, ProviderError, Result};
use crate::jsonl;
use crate::types::{LogitVector, Variant};

#[derive(Debug, Deserialize)]
struct FixtureLogitLine {
    item_id: String,
    ordering_name: String,
    logits: LogitVector,
}

/// Precomputed logits keyed by `(item_id, ordering_name)`; read-only after load.
#[derive(Debug, Clone)]
pub struct FixtureLogits {
    tag: String,
    entries: HashMap<(String, String), LogitVector>,
}

impl FixtureLogits {
    pub fn load(path: &Path) -> Result<Self> {
        let lines: Vec<FixtureLogitLine> = jsonl::read_jsonl(path)?;
        let mut entries = HashMap::with_capacity(lines.len());
        for line in lines {
            let key = (line.item_id, line.ordering_name);
            if entries.insert(key.clone(), line.logits).is_some() {
                return Err(Error::validation(format!(
                    "{}: duplicate fixture entry for ({}, {})",
                    path.display(),
                    key.0,
                    key.1
                )));
            }
        }
        Ok(FixtureLogits {
            tag: format!("fixture:{}", path.display()),
            entries,
        })
    }

    pub fn from_records(tag: impl Into<String>, records: &[LogitRecord]) -> Self {
        FixtureLogits {
            tag: tag.into(),
            entries: records
                .iter()
                .map(|r| ((r.item_id.clone(), r.ordering_name.clone()), r.logits))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl LogitProvider for FixtureLogits {
    fn tag(&self) -> &str {
        &self.tag
    }

    fn fetch_logits(&self, request: &LogitRequest) -> Result<LogitRecord, ProviderError> {
        let key = (request.item_id.clone(), request.ordering_name.clone());
        let logits = self
            .entries
            .get(&key)
            .copied()
            .ok_or_else(|| ProviderError::LogitLookup {
                item_id: request.item_id.clone(),
                ordering_name: request.ordering_name.clone(),
            })?;
        Ok(LogitRecord {
            item_id: request.item_id.clone(),
            ordering_name: request.ordering_name.clone(),
            logits,
            provider_tag: self.tag.clone(),
            latency_ms: None,
        })
    }
}

/// One line of an embedding fixture. `variant` is optional; entries without
/// it answer for both variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureEmbeddingRecord {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<Variant>,
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct FixtureEmbeddings {
    entries: HashMap<(String, Option<Variant>), Vec<f64>>,
}

impl FixtureEmbeddings {
    pub fn load(path: &Path) -> Result<Self> {
        let records: Vec<FixtureEmbeddingRecord> = jsonl::read_jsonl(path)?;
        Self::from_records(records)
    }

    pub fn from_records(records: Vec<FixtureEmbeddingRecord>) -> Result<Self> {
        let mut entries = HashMap::new();
        let mut dim = None;
        for r in records {
            if *dim.get_or_insert(r.vector.len()) != r.vector.len() {
                return Err(Error::validation(format!(
                    "fixture embedding for {:?} has inconsistent dimension",
                    r.text
                )));
            }
            entries.insert((r.text, r.variant), r.vector);
        }
        Ok(FixtureEmbeddings { entries })
    }
}

impl EmbeddingProvider for FixtureEmbeddings {
    fn fetch_embedding(&self, text: &str, variant: Variant) -> Result<Vec<f64>, ProviderError> {
        self.entries
            .get(&(text.to_string(), Some(variant)))
            .or_else(|| self.entries.get(&(text.to_string(), None)))
            .cloned()
            .ok_or_else(|| ProviderError::EmbeddingLookup {
                text: text.to_string(),
            })
    }
}

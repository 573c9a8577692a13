use std::path::Path;

use super::{LogitProvider, LogitRecord, LogitRequest};
use crate::error::{ProviderError, Result};
use crate::jsonl;
use crate::simbias::{synth_logits, SyntheticModelParams};

/// In-process biased answering model.
#[derive(Debug, Clone)]
pub struct SyntheticProvider {
    params: SyntheticModelParams,
    tag: String,
}

impl SyntheticProvider {
    pub fn new(params: SyntheticModelParams) -> Result<Self> {
        params.validate()?;
        Ok(SyntheticProvider {
            tag: format!("synth:seed={}", params.seed),
            params,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::new(jsonl::read_json(path)?)
    }

    pub fn params(&self) -> &SyntheticModelParams {
        &self.params
    }
}

impl LogitProvider for SyntheticProvider {
    fn tag(&self) -> &str {
        &self.tag
    }

    fn fetch_logits(&self, request: &LogitRequest) -> Result<LogitRecord, ProviderError> {
        Ok(LogitRecord {
            item_id: request.item_id.clone(),
            ordering_name: request.ordering_name.clone(),
            logits: synth_logits(&request.presented, &self.params),
            provider_tag: self.tag.clone(),
            latency_ms: None,
        })
    }
}

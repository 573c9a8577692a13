use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::{EmbeddingProvider, LogitProvider, LogitRecord, LogitRequest};
use crate::error::{Error, ProviderError, Result};
use crate::types::{LogitVector, Variant};

pub const TIMEOUT_ENV: &str = "MCQDEBIAS_HTTP_TIMEOUT_MS";
const DEFAULT_TIMEOUT_MS: u64 = 30_000;

/// Wire bodies of the model-adapter protocol.
pub mod wire {
    use serde::{Deserialize, Serialize};

    #[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
    pub struct LabeledOption {
        pub label: String,
        pub text: String,
    }

    /// `POST /v1/logits`
    #[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
    pub struct LogitsRequest {
        pub question: String,
        pub options: Vec<LabeledOption>,
        pub image_ref: String,
    }

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    pub struct LogitsResponse {
        pub logits: Vec<f64>,
    }

    /// `POST /v1/embed`
    #[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
    pub struct EmbedRequest {
        pub texts: Vec<String>,
    }

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    pub struct EmbedResponse {
        pub vectors: Vec<Vec<f64>>,
    }
}

/// Delays before each retry; transport failures only.
#[derive(Debug, Clone, PartialEq)]
pub struct RetryPolicy {
    pub backoff: Vec<Duration>,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            backoff: vec![
                Duration::from_millis(500),
                Duration::from_secs(1),
                Duration::from_secs(2),
            ],
        }
    }
}

#[derive(Debug, Clone)]
pub struct HttpConfig {
    pub timeout: Duration,
    pub max_in_flight: usize,
    pub retry: RetryPolicy,
}

impl HttpConfig {
    pub fn new(max_in_flight: usize) -> Self {
        HttpConfig {
            timeout: Duration::from_millis(DEFAULT_TIMEOUT_MS),
            max_in_flight: max_in_flight.max(1),
            retry: RetryPolicy::default(),
        }
    }

    /// Reads the timeout from `MCQDEBIAS_HTTP_TIMEOUT_MS` (default 30000).
    pub fn from_env(max_in_flight: usize) -> Result<Self> {
        let mut config = Self::new(max_in_flight);
        if let Ok(raw) = std::env::var(TIMEOUT_ENV) {
            let ms: u64 = raw.trim().parse().map_err(|_| {
                Error::validation(format!("{TIMEOUT_ENV} must be an integer, got {raw:?}"))
            })?;
            config.timeout = Duration::from_millis(ms);
        }
        Ok(config)
    }
}

/// Counting gate bounding concurrent requests.
#[derive(Debug)]
struct InFlightGate {
    limit: usize,
    current: Mutex<usize>,
    released: Condvar,
}

struct GatePermit<'a>(&'a InFlightGate);

impl InFlightGate {
    fn new(limit: usize) -> Self {
        InFlightGate {
            limit,
            current: Mutex::new(0),
            released: Condvar::new(),
        }
    }

    fn acquire(&self) -> GatePermit<'_> {
        let mut current = self.current.lock().unwrap_or_else(|e| e.into_inner());
        while *current >= self.limit {
            current = self
                .released
                .wait(current)
                .unwrap_or_else(|e| e.into_inner());
        }
        *current += 1;
        GatePermit(self)
    }
}

impl Drop for GatePermit<'_> {
    fn drop(&mut self) {
        let mut current = self.0.current.lock().unwrap_or_else(|e| e.into_inner());
        *current -= 1;
        self.0.released.notify_one();
    }
}

/// Client for a model-adapter service.
pub struct HttpProvider {
    base_url: String,
    tag: String,
    agent: ureq::Agent,
    retry: RetryPolicy,
    gate: InFlightGate,
}

impl HttpProvider {
    pub fn new(base_url: &str, config: HttpConfig) -> Result<Self> {
        let base_url = base_url.trim_end_matches('/').to_string();
        if !(base_url.starts_with("http://") || base_url.starts_with("https://")) {
            return Err(Error::validation(format!(
                "adapter URL {base_url:?} must start with http:// or https://"
            )));
        }
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(HttpProvider {
            tag: format!("http:{base_url}"),
            base_url,
            agent,
            retry: config.retry,
            gate: InFlightGate::new(config.max_in_flight.max(1)),
        })
    }

    fn post<B: Serialize, T: DeserializeOwned>(
        &self,
        path: &str,
        body: &B,
    ) -> Result<T, ProviderError> {
        let url = format!("{}{path}", self.base_url);
        let mut attempt = 0u32;
        loop {
            attempt += 1;
            let permit = self.gate.acquire();
            match self.agent.post(&url).send_json(body) {
                Ok(mut response) => {
                    let status = response.status().as_u16();
                    if status != 200 {
                        let body = response
                            .body_mut()
                            .read_to_string()
                            .unwrap_or_else(|e| format!("<unreadable body: {e}>"));
                        return Err(ProviderError::Status { status, body });
                    }
                    return response
                        .body_mut()
                        .read_json::<T>()
                        .map_err(|e| ProviderError::Protocol(e.to_string()));
                }
                Err(e) => {
                    drop(permit);
                    let retry_index = (attempt - 1) as usize;
                    match self.retry.backoff.get(retry_index) {
                        Some(delay) => std::thread::sleep(*delay),
                        None => {
                            return Err(ProviderError::Transport {
                                attempts: attempt,
                                message: e.to_string(),
                            })
                        }
                    }
                }
            }
        }
    }

    /// `GET /healthz`; returns the response body.
    pub fn health(&self) -> Result<String, ProviderError> {
        let url = format!("{}/healthz", self.base_url);
        let _permit = self.gate.acquire();
        let mut response = self
            .agent
            .get(&url)
            .call()
            .map_err(|e| ProviderError::Transport {
                attempts: 1,
                message: e.to_string(),
            })?;
        let status = response.status().as_u16();
        let body = response
            .body_mut()
            .read_to_string()
            .map_err(|e| ProviderError::Protocol(e.to_string()))?;
        if status != 200 {
            return Err(ProviderError::Status { status, body });
        }
        Ok(body)
    }

    pub fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ProviderError> {
        let response: wire::EmbedResponse = self.post(
            "/v1/embed",
            &wire::EmbedRequest {
                texts: texts.to_vec(),
            },
        )?;
        if response.vectors.len() != texts.len() {
            return Err(ProviderError::Protocol(format!(
                "expected {} vectors, got {}",
                texts.len(),
                response.vectors.len()
            )));
        }
        if let Some(v) = response
            .vectors
            .iter()
            .find(|v| v.is_empty() || v.iter().any(|x| !x.is_finite()))
        {
            return Err(ProviderError::Protocol(format!(
                "embedding vector of length {} is empty or non-finite",
                v.len()
            )));
        }
        Ok(response.vectors)
    }
}

impl LogitProvider for HttpProvider {
    fn tag(&self) -> &str {
        &self.tag
    }

    fn fetch_logits(&self, request: &LogitRequest) -> Result<LogitRecord, ProviderError> {
        let p = &request.presented;
        let body = wire::LogitsRequest {
            question: p.question_text.clone(),
            options: p
                .options
                .iter()
                .map(|o| wire::LabeledOption {
                    label: o.label.clone(),
                    text: o.text.clone(),
                })
                .collect(),
            image_ref: p.image_ref.clone(),
        };
        let started = Instant::now();
        let response: wire::LogitsResponse = self.post("/v1/logits", &body)?;
        let latency_ms = started.elapsed().as_secs_f64() * 1e3;
        let logits = LogitVector::from_slice(&response.logits)
            .map_err(|e| ProviderError::Protocol(e.to_string()))?;
        Ok(LogitRecord {
            item_id: request.item_id.clone(),
            ordering_name: request.ordering_name.clone(),
            logits,
            provider_tag: self.tag.clone(),
            latency_ms: Some(latency_ms),
        })
    }
}

impl EmbeddingProvider for HttpProvider {
    fn fetch_embedding(&self, text: &str, _variant: Variant) -> Result<Vec<f64>, ProviderError> {
        let mut vectors = self.embed_batch(&[text.to_string()])?;
        Ok(vectors.remove(0))
    }
}

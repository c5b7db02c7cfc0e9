//! OpenAI-compatible chat and embedding backends over blocking HTTP.
//!
//! Requests go to `{api_base}/chat/completions` and `{api_base}/embeddings`.
//! Transport failures and 5xx responses are retried with exponential
//! backoff; any other non-success status fails at once.

use std::env;
use std::thread;
use std::time::{Duration, Instant};

use log::{debug, warn};
use reqwest::blocking::{Client, Response};
use serde::{Deserialize, Serialize};
use serde_json::json;

use cothinker_core::{BackendDescriptor, ChatBackend, ChatRequest, Completion, Embedder, EngineConfig, Error, Result};

use crate::threaded::parallel_batch;

pub const ENV_API_BASE: &str = "COTHINKER_API_BASE";
pub const ENV_API_KEY: &str = "COTHINKER_API_KEY";
pub const ENV_MODEL: &str = "COTHINKER_MODEL";
pub const DEFAULT_API_BASE: &str = "https://api.openai.com/v1";
/// Header carrying the request tag, for server-side logs and test servers.
pub const TAG_HEADER: &str = "x-cothinker-tag";

#[derive(Debug, Clone)]
pub struct HttpSettings {
    pub api_base: String,
    pub api_key: Option<String>,
    pub model: String,
    pub max_retries: u32,
    pub retry_base_delay: Duration,
    pub timeout: Duration,
}

impl HttpSettings {
    /// Fills unset descriptor fields from the environment. The API key only
    /// ever comes from the environment.
    pub fn resolve(desc: &BackendDescriptor, cfg: &EngineConfig, field: &'static str) -> Result<Self> {
        let BackendDescriptor::OpenAi { api_base, model } = desc else {
            return Err(Error::InvalidConfig { field, message: "not an HTTP backend".into() });
        };
        let api_base = api_base
            .clone()
            .or_else(|| env::var(ENV_API_BASE).ok())
            .unwrap_or_else(|| DEFAULT_API_BASE.to_string());
        let model = model.clone().or_else(|| env::var(ENV_MODEL).ok()).ok_or_else(|| Error::InvalidConfig {
            field,
            message: format!("no model given; set `{field}.model` or {ENV_MODEL}"),
        })?;
        Ok(HttpSettings {
            api_base: api_base.trim_end_matches('/').to_string(),
            api_key: env::var(ENV_API_KEY).ok().filter(|k| !k.is_empty()),
            model,
            max_retries: cfg.max_retries,
            retry_base_delay: Duration::from_millis(cfg.retry_base_delay_ms),
            timeout: Duration::from_secs(cfg.request_timeout_secs),
        })
    }
}

struct HttpClient {
    settings: HttpSettings,
    client: Client,
    id: String,
}

enum Failure {
    Retryable(String),
    Fatal(Error),
}

impl HttpClient {
    fn new(settings: HttpSettings) -> Result<Self> {
        let client = Client::builder().timeout(settings.timeout).build().map_err(|e| Error::BackendUnavailable {
            backend: settings.api_base.clone(),
            attempts: 0,
            reason: e.to_string(),
        })?;
        let id = format!("{}#{}", settings.api_base, settings.model);
        Ok(HttpClient { settings, client, id })
    }

    /// POSTs `body` until it succeeds, fails permanently, or runs out of
    /// attempts. Returns the parsed body and the number of retries used.
    fn post<T: for<'de> Deserialize<'de>>(&self, path: &str, body: &serde_json::Value, tag: Option<&str>) -> Result<(T, u32)> {
        let url = format!("{}/{path}", self.settings.api_base);
        let attempts = self.settings.max_retries + 1;
        let mut last = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                let delay = self.settings.retry_base_delay.saturating_mul(1 << (attempt - 1).min(16));
                warn!("{}: retry {attempt}/{} after {delay:?}: {last}", self.id, self.settings.max_retries);
                thread::sleep(delay);
            }
            let mut req = self.client.post(&url).json(body);
            if let Some(key) = &self.settings.api_key {
                req = req.bearer_auth(key);
            }
            if let Some(tag) = tag {
                req = req.header(TAG_HEADER, tag);
            }
            let outcome = match req.send() {
                Ok(resp) => self.read(resp),
                Err(e) => Err(Failure::Retryable(e.to_string())),
            };
            match outcome {
                Ok(v) => return Ok((v, attempt)),
                Err(Failure::Fatal(e)) => return Err(e),
                Err(Failure::Retryable(reason)) => last = reason,
            }
        }
        Err(Error::BackendUnavailable { backend: self.id.clone(), attempts, reason: last })
    }

    fn read<T: for<'de> Deserialize<'de>>(&self, resp: Response) -> std::result::Result<T, Failure> {
        let status = resp.status();
        let text = resp.text().map_err(|e| Failure::Retryable(e.to_string()))?;
        if status.is_server_error() {
            return Err(Failure::Retryable(format!("HTTP {status}")));
        }
        if !status.is_success() {
            return Err(Failure::Fatal(Error::Rejected { backend: self.id.clone(), status: status.as_u16(), body: text }));
        }
        serde_json::from_str(&text).map_err(|e| {
            Failure::Fatal(Error::MalformedResponse { backend: self.id.clone(), reason: e.to_string() })
        })
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    content: Option<String>,
}

#[derive(Serialize)]
struct WireMessage<'a> {
    role: &'static str,
    content: &'a str,
}

/// JSON body sent for one chat request. `top_p`/`top_k` are left to the
/// server defaults.
pub fn chat_payload(model: &str, req: &ChatRequest) -> serde_json::Value {
    let mut messages = Vec::with_capacity(2);
    if let Some(system) = &req.system_text {
        messages.push(WireMessage { role: "system", content: system });
    }
    messages.push(WireMessage { role: "user", content: &req.user_text });
    json!({
        "model": model,
        "messages": messages,
        "temperature": req.temperature,
        "frequency_penalty": req.frequency_penalty,
        "max_tokens": req.max_tokens,
    })
}

pub struct OpenAiChat {
    http: HttpClient,
}

impl OpenAiChat {
    pub fn new(settings: HttpSettings) -> Result<Self> {
        Ok(OpenAiChat { http: HttpClient::new(settings)? })
    }
}

impl ChatBackend for OpenAiChat {
    fn backend_id(&self) -> String {
        self.http.id.clone()
    }

    fn complete(&self, req: &ChatRequest) -> Result<Completion> {
        let started = Instant::now();
        let body = chat_payload(&self.http.settings.model, req);
        let (resp, retries): (ChatResponse, u32) = self.http.post("chat/completions", &body, Some(req.tag.as_str()))?;
        let text = resp.choices.into_iter().next().and_then(|c| c.message.content).ok_or_else(|| {
            Error::MalformedResponse { backend: self.http.id.clone(), reason: "no message content in first choice".into() }
        })?;
        debug!("{} {} completed in {:?}", self.http.id, req.tag.as_str(), started.elapsed());
        Ok(Completion { text, backend_id: self.http.id.clone(), latency: started.elapsed(), retry_count: retries })
    }

    fn complete_batch(&self, reqs: &[ChatRequest]) -> Vec<Result<Completion>> {
        parallel_batch(self, reqs)
    }
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingDatum>,
}

#[derive(Deserialize)]
struct EmbeddingDatum {
    embedding: Vec<f64>,
    #[serde(default)]
    index: Option<usize>,
}

pub struct OpenAiEmbedder {
    http: HttpClient,
}

impl OpenAiEmbedder {
    pub fn new(settings: HttpSettings) -> Result<Self> {
        Ok(OpenAiEmbedder { http: HttpClient::new(settings)? })
    }

    fn request(&self, inputs: &[&str]) -> Result<Vec<Vec<f64>>> {
        let body = json!({ "model": self.http.settings.model, "input": inputs });
        let (resp, _): (EmbeddingResponse, u32) = self.http.post("embeddings", &body, None)?;
        if resp.data.len() != inputs.len() {
            return Err(Error::MalformedResponse {
                backend: self.http.id.clone(),
                reason: format!("{} embeddings for {} inputs", resp.data.len(), inputs.len()),
            });
        }
        let mut data = resp.data;
        if data.iter().all(|d| d.index.is_some()) {
            data.sort_by_key(|d| d.index);
        }
        Ok(data.into_iter().map(|d| d.embedding).collect())
    }
}

impl Embedder for OpenAiEmbedder {
    fn embed_raw(&self, text: &str) -> Result<Vec<f64>> {
        Ok(self.request(&[text])?.remove(0))
    }

    /// One request for the whole batch; on failure every entry carries the error.
    fn embed_raw_batch(&self, texts: &[&str]) -> Vec<Result<Vec<f64>>> {
        if texts.is_empty() {
            return Vec::new();
        }
        match self.request(texts) {
            Ok(vs) => vs.into_iter().map(Ok).collect(),
            Err(e) => {
                let msg = e.to_string();
                let mut out = vec![Err(e)];
                out.extend((1..texts.len()).map(|_| {
                    Err(Error::MalformedResponse { backend: self.http.id.clone(), reason: msg.clone() })
                }));
                out
            }
        }
    }
}

//! Chat-completion and embedding client with retries, a concurrency cap and
//! a fixture-backed mock.

mod http;
mod mock;

use std::fmt;
use std::path::PathBuf;
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::reduction::EmbeddingVector;

pub use http::HttpBackend;
pub use mock::{load_fixtures, prompt_hash, MockBackend};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage { role: Role::System, content: content.into() }
    }
    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage { role: Role::User, content: content.into() }
    }
    pub fn assistant(content: impl Into<String>) -> Self {
        ChatMessage { role: Role::Assistant, content: content.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub messages: Vec<ChatMessage>,
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl ChatRequest {
    pub fn new(messages: Vec<ChatMessage>, cfg: &GatewayConfig) -> Self {
        ChatRequest {
            messages,
            model: cfg.model.clone(),
            temperature: cfg.temperature,
            max_tokens: cfg.max_tokens,
            seed: cfg.seed,
        }
    }

    pub fn check(&self) -> Result<(), GatewayError> {
        let first = self.messages.first().ok_or_else(|| GatewayError::Invalid("no messages".into()))?;
        if first.role != Role::System {
            return Err(GatewayError::Invalid("first message must be the system message".into()));
        }
        if let Some(m) = self.messages.iter().find(|m| m.role != Role::Assistant && m.content.trim().is_empty()) {
            return Err(GatewayError::Invalid(format!("empty {} message", m.role.as_str())));
        }
        if self.temperature < 0.0 || self.max_tokens == 0 {
            return Err(GatewayError::Invalid("temperature must be >= 0 and max_tokens >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Http,
    #[default]
    Mock,
}

impl std::str::FromStr for BackendKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "http" => Ok(BackendKind::Http),
            "mock" => Ok(BackendKind::Mock),
            other => Err(format!("unknown backend `{other}` (expected http or mock)")),
        }
    }
}

#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GatewayConfig {
    pub base_url: String,
    #[serde(skip_serializing)]
    pub api_key: String,
    pub model: String,
    pub embedding_model: String,
    pub max_concurrent: usize,
    pub retry_limit: u32,
    pub backend: BackendKind,
    pub fixtures: Option<PathBuf>,
    pub embedding_dim: usize,
    pub temperature: f64,
    pub max_tokens: u32,
    pub seed: Option<u64>,
    pub timeout_secs: u64,
    /// First retry delay in milliseconds; doubles per attempt.
    pub backoff_base_ms: u64,
    pub backoff_cap_ms: u64,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        GatewayConfig {
            base_url: "http://localhost:8000/v1".into(),
            api_key: String::new(),
            model: "default".into(),
            embedding_model: "default".into(),
            max_concurrent: 4,
            retry_limit: 3,
            backend: BackendKind::Mock,
            fixtures: None,
            embedding_dim: 64,
            temperature: 0.0,
            max_tokens: 4096,
            seed: Some(0),
            timeout_secs: 300,
            backoff_base_ms: 1000,
            backoff_cap_ms: 30_000,
        }
    }
}

impl fmt::Debug for GatewayConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GatewayConfig")
            .field("base_url", &self.base_url)
            .field("api_key", &if self.api_key.is_empty() { "" } else { "<redacted>" })
            .field("model", &self.model)
            .field("max_concurrent", &self.max_concurrent)
            .field("retry_limit", &self.retry_limit)
            .field("backend", &self.backend)
            .field("fixtures", &self.fixtures)
            .finish_non_exhaustive()
    }
}

impl GatewayConfig {
    /// Overrides endpoint, key and model from LLM_API_BASE, LLM_API_KEY and LLM_MODEL.
    pub fn apply_env(&mut self) {
        if let Ok(v) = std::env::var("LLM_API_BASE") {
            self.base_url = v;
        }
        if let Ok(v) = std::env::var("LLM_API_KEY") {
            self.api_key = v;
        }
        if let Ok(v) = std::env::var("LLM_MODEL") {
            self.model = v;
        }
    }

    pub fn check(&self) -> Result<(), GatewayError> {
        if self.max_concurrent == 0 {
            return Err(GatewayError::Invalid("max_concurrent must be at least 1".into()));
        }
        if self.embedding_dim == 0 {
            return Err(GatewayError::Invalid("embedding_dim must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GatewayError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("HTTP status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("response has no choices")]
    EmptyChoices,
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("no fixture for prompt hash {0}")]
    NoFixture(String),
    #[error("fixture file: {0}")]
    Fixture(String),
    #[error("invalid request: {0}")]
    Invalid(String),
}

impl GatewayError {
    pub fn is_retryable(&self) -> bool {
        match self {
            GatewayError::Transport(_) => true,
            GatewayError::Status { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

pub trait Backend: Send + Sync {
    fn chat(&self, req: &ChatRequest) -> Result<String, GatewayError>;
    fn embed(&self, texts: &[String], model: &str, dim: usize) -> Result<Vec<EmbeddingVector>, GatewayError>;
}

/// Delay before retry number `attempt` (0-based): base·2^attempt, capped.
pub fn backoff_delay(attempt: u32, base: Duration, cap: Duration) -> Duration {
    let factor = 1u32.checked_shl(attempt.min(31)).unwrap_or(u32::MAX);
    base.saturating_mul(factor).min(cap)
}

struct Semaphore {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Semaphore);

impl Semaphore {
    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

/// Shareable client. Calls block while `max_concurrent` requests are in flight.
#[derive(Clone)]
pub struct Gateway {
    backend: Arc<dyn Backend>,
    cfg: GatewayConfig,
    permits: Arc<Semaphore>,
}

impl Gateway {
    pub fn new(backend: Arc<dyn Backend>, cfg: GatewayConfig) -> Result<Self, GatewayError> {
        cfg.check()?;
        let permits = Arc::new(Semaphore { free: Mutex::new(cfg.max_concurrent), cv: Condvar::new() });
        Ok(Gateway { backend, cfg, permits })
    }

    /// Builds the backend named by the config.
    pub fn from_config(cfg: GatewayConfig) -> Result<Self, GatewayError> {
        let backend: Arc<dyn Backend> = match cfg.backend {
            BackendKind::Http => Arc::new(HttpBackend::new(&cfg)?),
            BackendKind::Mock => {
                let path = cfg
                    .fixtures
                    .as_ref()
                    .ok_or_else(|| GatewayError::Fixture("mock backend needs a fixture file".into()))?;
                Arc::new(MockBackend::from_file(path)?)
            }
        };
        Gateway::new(backend, cfg)
    }

    pub fn config(&self) -> &GatewayConfig {
        &self.cfg
    }

    pub fn request(&self, messages: Vec<ChatMessage>) -> ChatRequest {
        ChatRequest::new(messages, &self.cfg)
    }

    pub fn chat(&self, req: &ChatRequest) -> Result<String, GatewayError> {
        req.check()?;
        self.with_retries(|| self.backend.chat(req))
    }

    pub fn chat_messages(&self, messages: Vec<ChatMessage>) -> Result<String, GatewayError> {
        self.chat(&self.request(messages))
    }

    pub fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, GatewayError> {
        if texts.is_empty() {
            return Err(GatewayError::Invalid("no texts to embed".into()));
        }
        let out = self.with_retries(|| self.backend.embed(texts, &self.cfg.embedding_model, self.cfg.embedding_dim))?;
        if out.len() != texts.len() {
            return Err(GatewayError::Malformed(format!("{} embeddings for {} inputs", out.len(), texts.len())));
        }
        Ok(out)
    }

    fn with_retries<T>(&self, mut call: impl FnMut() -> Result<T, GatewayError>) -> Result<T, GatewayError> {
        let base = Duration::from_millis(self.cfg.backoff_base_ms);
        let cap = Duration::from_millis(self.cfg.backoff_cap_ms);
        let mut attempt = 0;
        loop {
            let result = {
                let _permit = self.permits.acquire();
                call()
            };
            match result {
                Err(e) if e.is_retryable() && attempt < self.cfg.retry_limit => {
                    let delay = backoff_delay(attempt, base, cap);
                    log::warn!("request failed ({e}); retry {} in {:?}", attempt + 1, delay);
                    std::thread::sleep(delay);
                    attempt += 1;
                }
                other => return other,
            }
        }
    }
}

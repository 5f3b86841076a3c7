//! Uniform completion interface over interchangeable backends.
//!
//! Three modes: `live` sends chat-completions requests over HTTPS with retry
//! and rate limiting; `record` is live plus an append-to-cassette step (and
//! serves from the cassette when an entry already exists); `replay` answers
//! exclusively from the cassette and never constructs a network transport.
//!
//! Cassette entries are keyed by a fingerprint of (messages, model,
//! temperature); `max_output_tokens` is deliberately excluded so token-limit
//! tuning does not invalidate recordings (it is stored as entry metadata).

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;
use toolforge_core::templates::{Message, Role};

/// One completion request. `temperature` defaults to 0 everywhere in this
/// workspace; determinism is what makes filtering reproducible.
#[derive(Debug, Clone, Serialize)]
pub struct CompletionRequest {
    pub messages: Vec<Message>,
    pub model: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
}

impl CompletionRequest {
    pub fn new(messages: Vec<Message>, model: impl Into<String>) -> Self {
        CompletionRequest {
            messages,
            model: model.into(),
            temperature: 0.0,
            max_output_tokens: 2048,
        }
    }

    pub fn with_max_output_tokens(mut self, max_output_tokens: u32) -> Self {
        self.max_output_tokens = max_output_tokens;
        self
    }

    fn validate(&self) -> Result<(), GatewayError> {
        if self.messages.is_empty() {
            return Err(GatewayError::InvalidRequest("messages must be non-empty".into()));
        }
        if !matches!(self.messages[0].role, Role::System | Role::User) {
            return Err(GatewayError::InvalidRequest(
                "first message must be a system or user message".into(),
            ));
        }
        if self.temperature < 0.0 {
            return Err(GatewayError::InvalidRequest("temperature must be >= 0".into()));
        }
        if self.max_output_tokens == 0 {
            return Err(GatewayError::InvalidRequest("max_output_tokens must be positive".into()));
        }
        Ok(())
    }

    /// Stable cassette key: SHA-256 over the canonical JSON serialization of
    /// (messages, model, temperature). Identical across processes and
    /// platforms.
    pub fn fingerprint(&self) -> String {
        #[derive(Serialize)]
        struct Payload<'a> {
            messages: &'a [Message],
            model: &'a str,
            temperature: f64,
        }
        let canonical = serde_json::to_string(&Payload {
            messages: &self.messages,
            model: &self.model,
            temperature: self.temperature,
        })
        .expect("request is serializable");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("network failure after {attempts} attempts: {message}")]
    Network { attempts: u32, message: String },
    #[error("request rejected by endpoint: {0}")]
    Rejected(String),
    #[error("cassette miss for fingerprint {fingerprint}")]
    CassetteMiss { fingerprint: String },
    #[error("cassette {path}: {message}")]
    Cassette { path: String, message: String },
}

/// Transport-level failure classification drives the retry loop.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransportError {
    /// Worth retrying: connection failures, timeouts, 429 and 5xx statuses.
    Transient(String),
    /// Not worth retrying: auth failures, malformed requests, bad payloads.
    Fatal(String),
}

impl fmt::Display for TransportError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransportError::Transient(m) => write!(f, "transient: {m}"),
            TransportError::Fatal(m) => write!(f, "fatal: {m}"),
        }
    }
}

/// The network layer behind live and record modes. Tests substitute counting
/// or scripted implementations.
pub trait Transport: Send + Sync {
    fn send(&self, request: &CompletionRequest) -> Result<String, TransportError>;
}

impl<T: Transport + ?Sized> Transport for std::sync::Arc<T> {
    fn send(&self, request: &CompletionRequest) -> Result<String, TransportError> {
        (**self).send(request)
    }
}

/// Exponential backoff schedule: `base`, `base*factor`, ... between attempts.
#[derive(Debug, Clone)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base: Duration,
    pub factor: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { max_attempts: 5, base: Duration::from_secs(1), factor: 2.0 }
    }
}

impl RetryPolicy {
    /// Zero-delay variant for tests and offline use.
    pub fn immediate() -> Self {
        RetryPolicy { base: Duration::ZERO, ..RetryPolicy::default() }
    }

    /// Delay before retry number `retry` (1-based).
    pub fn delay_before_retry(&self, retry: u32) -> Duration {
        let scale = self.factor.powi(retry.saturating_sub(1) as i32);
        self.base.mul_f64(scale)
    }
}

/// Paces request starts so no more than `requests_per_minute` begin per
/// minute. Shared across workers; the lock covers only schedule bookkeeping.
pub struct RateLimiter {
    interval: Duration,
    next_start: Mutex<Option<Instant>>,
}

impl RateLimiter {
    pub fn per_minute(requests_per_minute: u32) -> Self {
        let rpm = requests_per_minute.max(1);
        RateLimiter {
            interval: Duration::from_secs_f64(60.0 / rpm as f64),
            next_start: Mutex::new(None),
        }
    }

    /// Blocks until a slot is available.
    fn acquire(&self) {
        let wait = self.reserve(Instant::now());
        if !wait.is_zero() {
            std::thread::sleep(wait);
        }
    }

    /// Returns how long the caller must wait from `now`; schedule state is
    /// updated immediately so concurrent callers get consecutive slots.
    fn reserve(&self, now: Instant) -> Duration {
        let mut next = self.next_start.lock().expect("rate limiter lock");
        let start = match *next {
            Some(at) if at > now => at,
            _ => now,
        };
        *next = Some(start + self.interval);
        start.saturating_duration_since(now)
    }
}

/// On-disk recording: a single JSON document, fingerprint-keyed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Cassette {
    pub version: u32,
    pub entries: BTreeMap<String, CassetteEntry>,
}

pub const CASSETTE_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CassetteEntry {
    pub response: String,
    pub model: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
}

impl Default for Cassette {
    fn default() -> Self {
        Cassette { version: CASSETTE_VERSION, entries: BTreeMap::new() }
    }
}

impl Cassette {
    pub fn load(path: &Path) -> Result<Self, GatewayError> {
        let at = |message: String| GatewayError::Cassette {
            path: path.display().to_string(),
            message,
        };
        let text = fs::read_to_string(path).map_err(|e| at(e.to_string()))?;
        let cassette: Cassette = serde_json::from_str(&text).map_err(|e| at(e.to_string()))?;
        if cassette.version != CASSETTE_VERSION {
            return Err(at(format!(
                "unsupported version {} (expected {CASSETTE_VERSION})",
                cassette.version
            )));
        }
        Ok(cassette)
    }

    pub fn save(&self, path: &Path) -> Result<(), GatewayError> {
        let at = |message: String| GatewayError::Cassette {
            path: path.display().to_string(),
            message,
        };
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| at(e.to_string()))?;
        }
        let mut text = serde_json::to_string_pretty(self).map_err(|e| at(e.to_string()))?;
        text.push('\n');
        fs::write(path, text).map_err(|e| at(e.to_string()))
    }
}

#[derive(Debug, Clone)]
pub struct GatewayConfig {
    pub retry: RetryPolicy,
    pub requests_per_minute: Option<u32>,
    /// Record mode flushes the cassette to disk after this many new entries
    /// (and always at `persist`/drop).
    pub flush_every: usize,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        GatewayConfig { retry: RetryPolicy::default(), requests_per_minute: None, flush_every: 512 }
    }
}

enum Backend {
    Live,
    Record { state: Mutex<RecordState> },
    Replay { cassette: Cassette },
}

struct RecordState {
    cassette: Cassette,
    path: PathBuf,
    unflushed: usize,
}

/// Completion gateway; safe to share across worker threads.
pub struct Gateway {
    backend: Backend,
    transport: Option<Box<dyn Transport>>,
    retry: RetryPolicy,
    limiter: Option<RateLimiter>,
    flush_every: usize,
}

impl Gateway {
    pub fn live(transport: Box<dyn Transport>, config: GatewayConfig) -> Self {
        Gateway {
            backend: Backend::Live,
            transport: Some(transport),
            limiter: config.requests_per_minute.map(RateLimiter::per_minute),
            flush_every: config.flush_every.max(1),
            retry: config.retry,
        }
    }

    /// Record mode resumes an existing cassette when the file is present.
    pub fn record(
        transport: Box<dyn Transport>,
        cassette_path: impl Into<PathBuf>,
        config: GatewayConfig,
    ) -> Result<Self, GatewayError> {
        let path = cassette_path.into();
        let cassette = if path.exists() { Cassette::load(&path)? } else { Cassette::default() };
        Ok(Gateway {
            backend: Backend::Record {
                state: Mutex::new(RecordState { cassette, path, unflushed: 0 }),
            },
            transport: Some(transport),
            limiter: config.requests_per_minute.map(RateLimiter::per_minute),
            flush_every: config.flush_every.max(1),
            retry: config.retry,
        })
    }

    /// Replay mode never touches the network: no transport exists at all.
    pub fn replay(cassette_path: &Path) -> Result<Self, GatewayError> {
        Ok(Gateway {
            backend: Backend::Replay { cassette: Cassette::load(cassette_path)? },
            transport: None,
            retry: RetryPolicy::immediate(),
            limiter: None,
            flush_every: 1,
        })
    }

    pub fn mode(&self) -> &'static str {
        match self.backend {
            Backend::Live => "live",
            Backend::Record { .. } => "record",
            Backend::Replay { .. } => "replay",
        }
    }

    pub fn complete(&self, request: &CompletionRequest) -> Result<String, GatewayError> {
        request.validate()?;
        let fingerprint = request.fingerprint();
        match &self.backend {
            Backend::Replay { cassette } => cassette
                .entries
                .get(&fingerprint)
                .map(|entry| entry.response.clone())
                .ok_or(GatewayError::CassetteMiss { fingerprint }),
            Backend::Live => self.send_with_retry(request),
            Backend::Record { state } => {
                {
                    let guard = state.lock().expect("cassette lock");
                    if let Some(entry) = guard.cassette.entries.get(&fingerprint) {
                        return Ok(entry.response.clone());
                    }
                }
                let response = self.send_with_retry(request)?;
                let mut guard = state.lock().expect("cassette lock");
                guard.cassette.entries.insert(
                    fingerprint,
                    CassetteEntry {
                        response: response.clone(),
                        model: request.model.clone(),
                        temperature: request.temperature,
                        max_output_tokens: request.max_output_tokens,
                    },
                );
                guard.unflushed += 1;
                if guard.unflushed >= self.flush_every {
                    let path = guard.path.clone();
                    guard.cassette.save(&path)?;
                    guard.unflushed = 0;
                }
                Ok(response)
            }
        }
    }

    /// Writes any unflushed recordings to disk. No-op outside record mode.
    pub fn persist(&self) -> Result<(), GatewayError> {
        if let Backend::Record { state } = &self.backend {
            let mut guard = state.lock().expect("cassette lock");
            if guard.unflushed > 0 {
                let path = guard.path.clone();
                guard.cassette.save(&path)?;
                guard.unflushed = 0;
            }
        }
        Ok(())
    }

    fn send_with_retry(&self, request: &CompletionRequest) -> Result<String, GatewayError> {
        let transport = self.transport.as_ref().expect("live/record modes have a transport");
        let mut last_message = String::new();
        for attempt in 1..=self.retry.max_attempts {
            if let Some(limiter) = &self.limiter {
                limiter.acquire();
            }
            match transport.send(request) {
                Ok(response) => return Ok(response),
                Err(TransportError::Fatal(message)) => {
                    return Err(GatewayError::Rejected(message));
                }
                Err(TransportError::Transient(message)) => {
                    last_message = message;
                    if attempt < self.retry.max_attempts {
                        let delay = self.retry.delay_before_retry(attempt);
                        if !delay.is_zero() {
                            std::thread::sleep(delay);
                        }
                    }
                }
            }
        }
        Err(GatewayError::Network { attempts: self.retry.max_attempts, message: last_message })
    }
}

impl Drop for Gateway {
    fn drop(&mut self) {
        if let Err(e) = self.persist() {
            eprintln!("warning: failed to persist cassette on shutdown: {e}");
        }
    }
}

/// Live HTTPS transport speaking the chat-completions JSON shape. Endpoint
/// and credentials come from `FORGE_API_URL` and `FORGE_API_KEY`.
pub struct HttpTransport {
    endpoint: String,
    api_key: String,
    agent: ureq::Agent,
}

pub const API_URL_VAR: &str = "FORGE_API_URL";
pub const API_KEY_VAR: &str = "FORGE_API_KEY";

impl HttpTransport {
    pub fn new(endpoint: impl Into<String>, api_key: impl Into<String>) -> Self {
        HttpTransport {
            endpoint: endpoint.into(),
            api_key: api_key.into(),
            agent: ureq::Agent::new_with_defaults(),
        }
    }

    pub fn from_env() -> Result<Self, String> {
        let endpoint =
            std::env::var(API_URL_VAR).map_err(|_| format!("{API_URL_VAR} is not set"))?;
        let api_key = std::env::var(API_KEY_VAR).map_err(|_| format!("{API_KEY_VAR} is not set"))?;
        Ok(HttpTransport::new(endpoint, api_key))
    }
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    messages: &'a [Message],
    temperature: f64,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireMessage,
}

#[derive(Deserialize)]
struct WireMessage {
    content: String,
}

impl Transport for HttpTransport {
    fn send(&self, request: &CompletionRequest) -> Result<String, TransportError> {
        let body = serde_json::to_string(&WireRequest {
            model: &request.model,
            messages: &request.messages,
            temperature: request.temperature,
            max_tokens: request.max_output_tokens,
        })
        .map_err(|e| TransportError::Fatal(e.to_string()))?;

        let sent = self
            .agent
            .post(&self.endpoint)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .header("Content-Type", "application/json")
            .send(body.as_bytes());

        let mut response = match sent {
            Ok(response) => response,
            Err(ureq::Error::StatusCode(code)) if code == 429 || code >= 500 => {
                return Err(TransportError::Transient(format!("HTTP status {code}")));
            }
            Err(ureq::Error::StatusCode(code)) => {
                return Err(TransportError::Fatal(format!("HTTP status {code}")));
            }
            Err(e) => return Err(TransportError::Transient(e.to_string())),
        };

        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| TransportError::Transient(e.to_string()))?;
        let parsed: WireResponse = serde_json::from_str(&text)
            .map_err(|e| TransportError::Fatal(format!("malformed response body: {e}")))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|choice| choice.message.content)
            .ok_or_else(|| TransportError::Fatal("response carried no choices".into()))
    }
}

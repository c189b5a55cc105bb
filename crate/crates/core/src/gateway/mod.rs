//! Uniform completion interface over remote chat-completion endpoints and a
//! deterministic scripted backend.

mod openai;
mod scripted;
pub mod stub;

use std::collections::HashMap;
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prompt::Role;
use crate::transcript::prompt_fingerprint;

pub use openai::{OpenAiBackend, OpenAiConfig, RetryPolicy};
pub use scripted::{Matcher, ScriptFile, ScriptRule, ScriptedBackend, ScriptError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub prompt: String,
    pub model_id: String,
    pub temperature: f32,
    pub max_tokens: u32,
    pub timeout: Duration,
}

impl CompletionRequest {
    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(GatewayError::InvalidRequest(format!(
                "temperature must be >= 0, got {}",
                self.temperature
            )));
        }
        if self.max_tokens == 0 {
            return Err(GatewayError::InvalidRequest("max_tokens must be >= 1".into()));
        }
        Ok(())
    }

    pub fn fingerprint(&self) -> String {
        prompt_fingerprint(&self.prompt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub total_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionResponse {
    /// Raw model output. May be empty; callers treat that as a parse failure.
    pub text: String,
    pub latency: Duration,
    pub usage: Option<Usage>,
    /// Wire attempts beyond the first.
    pub retry_count: u32,
}

impl CompletionResponse {
    pub fn immediate(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            latency: Duration::ZERO,
            usage: None,
            retry_count: 0,
        }
    }
}

/// Every variant carries the prompt fingerprint for transcript debugging.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GatewayError {
    #[error("request {fingerprint} timed out after {attempts} attempts")]
    Timeout { fingerprint: String, attempts: u32 },
    #[error("request {fingerprint} still rate limited after {attempts} attempts")]
    RateLimitedExhausted { fingerprint: String, attempts: u32 },
    #[error("request {fingerprint} rejected with status {status}: check the API credential")]
    AuthFailure { fingerprint: String, status: u16 },
    #[error("no script rule matches prompt {fingerprint}")]
    NoScriptMatch { fingerprint: String },
    #[error("request {fingerprint} failed with HTTP {status}: {body}")]
    Http {
        fingerprint: String,
        status: u16,
        body: String,
    },
    #[error("request {fingerprint}: transport error after {attempts} attempts: {message}")]
    Transport {
        fingerprint: String,
        attempts: u32,
        message: String,
    },
    #[error("request {fingerprint}: malformed completion payload: {message}")]
    BadPayload { fingerprint: String, message: String },
    #[error("record deadline exceeded before request {fingerprint}")]
    DeadlineExceeded { fingerprint: String },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

pub trait CompletionBackend: Send + Sync {
    fn name(&self) -> &str;
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, GatewayError>;
}

/// Anything that can answer a role prompt. Implemented by [`Gateway`] and by
/// per-record contexts that add deadlines.
pub trait ModelCall {
    fn call(&self, role: Role, prompt: &str) -> Result<CompletionResponse, GatewayError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSettings {
    pub model_id: String,
    pub temperature: f32,
    #[serde(default)]
    pub role_temperature: HashMap<Role, f32>,
    pub max_tokens: u32,
    pub timeout: Duration,
}

impl Default for ModelSettings {
    fn default() -> Self {
        Self {
            model_id: "scripted".into(),
            temperature: 0.0,
            role_temperature: HashMap::new(),
            max_tokens: 1024,
            timeout: Duration::from_secs(120),
        }
    }
}

impl ModelSettings {
    pub fn request(&self, role: Role, prompt: &str) -> CompletionRequest {
        CompletionRequest {
            prompt: prompt.to_string(),
            model_id: self.model_id.clone(),
            temperature: self
                .role_temperature
                .get(&role)
                .copied()
                .unwrap_or(self.temperature),
            max_tokens: self.max_tokens,
            timeout: self.timeout,
        }
    }
}

/// Global ceiling on in-flight requests.
#[derive(Debug)]
pub struct InflightLimiter {
    limit: usize,
    current: Mutex<usize>,
    freed: Condvar,
}

impl InflightLimiter {
    pub fn new(limit: usize) -> Self {
        Self {
            limit: limit.max(1),
            current: Mutex::new(0),
            freed: Condvar::new(),
        }
    }

    fn acquire(&self) -> InflightGuard<'_> {
        let mut current = self.current.lock().expect("limiter poisoned");
        while *current >= self.limit {
            current = self.freed.wait(current).expect("limiter poisoned");
        }
        *current += 1;
        InflightGuard { limiter: self }
    }
}

struct InflightGuard<'a> {
    limiter: &'a InflightLimiter,
}

impl Drop for InflightGuard<'_> {
    fn drop(&mut self) {
        let mut current = self.limiter.current.lock().expect("limiter poisoned");
        *current -= 1;
        self.limiter.freed.notify_one();
    }
}

/// Shareable front door to a backend.
#[derive(Clone)]
pub struct Gateway {
    backend: Arc<dyn CompletionBackend>,
    settings: ModelSettings,
    inflight: Option<Arc<InflightLimiter>>,
}

impl std::fmt::Debug for Gateway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Gateway")
            .field("backend", &self.backend.name())
            .field("settings", &self.settings)
            .finish()
    }
}

impl Gateway {
    pub fn new(backend: Arc<dyn CompletionBackend>, settings: ModelSettings) -> Self {
        Self {
            backend,
            settings,
            inflight: None,
        }
    }

    pub fn scripted(backend: ScriptedBackend) -> Self {
        Self::new(Arc::new(backend), ModelSettings::default())
    }

    pub fn with_inflight_limit(mut self, limit: usize) -> Self {
        self.inflight = Some(Arc::new(InflightLimiter::new(limit)));
        self
    }

    pub fn settings(&self) -> &ModelSettings {
        &self.settings
    }

    pub fn backend_name(&self) -> &str {
        self.backend.name()
    }

    pub fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, GatewayError> {
        request.validate()?;
        let _guard = self.inflight.as_ref().map(|l| l.acquire());
        self.backend.complete(request)
    }
}

impl ModelCall for Gateway {
    fn call(&self, role: Role, prompt: &str) -> Result<CompletionResponse, GatewayError> {
        self.complete(&self.settings.request(role, prompt))
    }
}

/// Per-record wall-clock budget over another caller.
pub struct Deadline<'a> {
    inner: &'a dyn ModelCall,
    deadline: Instant,
}

impl<'a> Deadline<'a> {
    pub fn new(inner: &'a dyn ModelCall, budget: Duration) -> Self {
        Self {
            inner,
            deadline: Instant::now() + budget,
        }
    }
}

impl ModelCall for Deadline<'_> {
    fn call(&self, role: Role, prompt: &str) -> Result<CompletionResponse, GatewayError> {
        if Instant::now() >= self.deadline {
            return Err(GatewayError::DeadlineExceeded {
                fingerprint: prompt_fingerprint(prompt),
            });
        }
        self.inner.call(role, prompt)
    }
}

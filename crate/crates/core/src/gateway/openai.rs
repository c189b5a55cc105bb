use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{CompletionBackend, CompletionRequest, CompletionResponse, GatewayError, Usage};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    /// Retries after the first attempt.
    pub max_retries: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 3,
            base_delay: Duration::from_secs(1),
            max_delay: Duration::from_secs(30),
        }
    }
}

impl RetryPolicy {
    /// Exponential delay before retry `n` (1-based), jittered to 50-100%.
    pub fn delay(&self, n: u32) -> Duration {
        let exp = self.base_delay.saturating_mul(1u32 << (n - 1).min(16));
        let capped = exp.min(self.max_delay);
        capped.mul_f64(0.5 + 0.5 * rand::random::<f64>())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpenAiConfig {
    /// Base URL up to and including the version segment, e.g. `https://host/v1`.
    pub endpoint: String,
    #[serde(skip_serializing, default)]
    pub api_key: Option<String>,
    #[serde(default)]
    pub retry: RetryPolicy,
    /// Minimum spacing between request starts.
    #[serde(default)]
    pub min_interval: Duration,
}

impl OpenAiConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            api_key: None,
            retry: RetryPolicy::default(),
            min_interval: Duration::ZERO,
        }
    }

    /// Reads the credential from the named environment variable.
    pub fn with_key_from_env(mut self, var: &str) -> Self {
        self.api_key = std::env::var(var).ok().filter(|k| !k.is_empty());
        self
    }
}

enum Transient {
    RateLimited,
    Timeout,
    Server(u16, String),
    Transport(String),
}

/// Client for chat-completion endpoints speaking the common OpenAI wire format.
pub struct OpenAiBackend {
    config: OpenAiConfig,
    agent: ureq::Agent,
    last_start: Mutex<Option<Instant>>,
}

impl std::fmt::Debug for OpenAiBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OpenAiBackend").field("config", &self.config).finish()
    }
}

impl OpenAiBackend {
    pub fn new(config: OpenAiConfig) -> Self {
        let agent_config = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .build();
        Self {
            config,
            agent: ureq::Agent::new_with_config(agent_config),
            last_start: Mutex::new(None),
        }
    }

    pub fn config(&self) -> &OpenAiConfig {
        &self.config
    }

    fn url(&self) -> String {
        format!("{}/chat/completions", self.config.endpoint.trim_end_matches('/'))
    }

    fn pace(&self) {
        if self.config.min_interval.is_zero() {
            return;
        }
        let mut last = self.last_start.lock().expect("rate limiter poisoned");
        if let Some(prev) = *last {
            let since = prev.elapsed();
            if since < self.config.min_interval {
                std::thread::sleep(self.config.min_interval - since);
            }
        }
        *last = Some(Instant::now());
    }

    fn attempt(&self, request: &CompletionRequest, body: &Value) -> Result<Result<(String, Option<Usage>), Transient>, GatewayError> {
        self.pace();
        let mut builder = self
            .agent
            .post(&self.url())
            .config()
            .timeout_global(Some(request.timeout))
            .build();
        if let Some(key) = &self.config.api_key {
            builder = builder.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = match builder.send_json(body) {
            Ok(resp) => resp,
            Err(ureq::Error::Timeout(_)) => return Ok(Err(Transient::Timeout)),
            Err(e) => return Ok(Err(Transient::Transport(e.to_string()))),
        };
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().unwrap_or_default();
        match status {
            200..=299 => decode(&text)
                .map(Ok)
                .map_err(|message| GatewayError::BadPayload {
                    fingerprint: request.fingerprint(),
                    message,
                }),
            401 | 403 => Err(GatewayError::AuthFailure {
                fingerprint: request.fingerprint(),
                status,
            }),
            429 => Ok(Err(Transient::RateLimited)),
            500..=599 => Ok(Err(Transient::Server(status, text))),
            _ => Err(GatewayError::Http {
                fingerprint: request.fingerprint(),
                status,
                body: text,
            }),
        }
    }
}

fn decode(text: &str) -> Result<(String, Option<Usage>), String> {
    let v: Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let message = v
        .pointer("/choices/0/message")
        .ok_or("response has no choices[0].message")?;
    let content = match message.get("content") {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Null) | None => String::new(),
        Some(other) => return Err(format!("message content is not a string: {other}")),
    };
    let usage = v.get("usage").and_then(|u| {
        Some(Usage {
            prompt_tokens: u.get("prompt_tokens")?.as_u64()?,
            completion_tokens: u.get("completion_tokens")?.as_u64()?,
            total_tokens: u.get("total_tokens")?.as_u64()?,
        })
    });
    Ok((content, usage))
}

impl CompletionBackend for OpenAiBackend {
    fn name(&self) -> &str {
        "openai"
    }

    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, GatewayError> {
        let body = json!({
            "model": request.model_id,
            "messages": [
                {"role": "system", "content": ""},
                {"role": "user", "content": request.prompt},
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        });
        let started = Instant::now();
        let policy = self.config.retry;
        let mut attempt = 0;
        loop {
            let failure = match self.attempt(request, &body)? {
                Ok((text, usage)) => {
                    return Ok(CompletionResponse {
                        text,
                        latency: started.elapsed(),
                        usage,
                        retry_count: attempt,
                    })
                }
                Err(t) => t,
            };
            attempt += 1;
            if attempt > policy.max_retries {
                let fingerprint = request.fingerprint();
                return Err(match failure {
                    Transient::RateLimited => GatewayError::RateLimitedExhausted {
                        fingerprint,
                        attempts: attempt,
                    },
                    Transient::Timeout => GatewayError::Timeout {
                        fingerprint,
                        attempts: attempt,
                    },
                    Transient::Server(status, body) => GatewayError::Http {
                        fingerprint,
                        status,
                        body,
                    },
                    Transient::Transport(message) => GatewayError::Transport {
                        fingerprint,
                        attempts: attempt,
                        message,
                    },
                });
            }
            let wait = policy.delay(attempt);
            log::debug!("request {} retry {attempt} in {wait:?}", request.fingerprint());
            std::thread::sleep(wait);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delay_grows_and_caps() {
        let p = RetryPolicy {
            max_retries: 3,
            base_delay: Duration::from_millis(100),
            max_delay: Duration::from_millis(300),
        };
        for _ in 0..20 {
            let d1 = p.delay(1);
            assert!(d1 >= Duration::from_millis(50) && d1 <= Duration::from_millis(100));
            let d3 = p.delay(3);
            assert!(d3 >= Duration::from_millis(150) && d3 <= Duration::from_millis(300));
        }
    }

    #[test]
    fn decode_payload() {
        let (text, usage) = decode(
            r#"{"choices":[{"message":{"role":"assistant","content":"{\"answer\":\"1932\"}"}}],"usage":{"prompt_tokens":3,"completion_tokens":4,"total_tokens":7}}"#,
        )
        .unwrap();
        assert_eq!(text, r#"{"answer":"1932"}"#);
        assert_eq!(usage.unwrap().total_tokens, 7);
        assert_eq!(decode(r#"{"choices":[{"message":{"content":null}}]}"#).unwrap().0, "");
        assert!(decode(r#"{"choices":[]}"#).is_err());
    }
}

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{CompletionBackend, CompletionRequest, CompletionResponse, GatewayError};
use crate::transcript::{prompt_fingerprint, RunTranscript};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Matcher {
    Exact(String),
    Contains(String),
    Regex(#[serde(with = "regex_serde")] Regex),
}

mod regex_serde {
    use regex::Regex;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(re: &Regex, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(re.as_str())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Regex, D::Error> {
        let pattern = String::deserialize(d)?;
        Regex::new(&pattern).map_err(serde::de::Error::custom)
    }
}

impl Matcher {
    pub fn regex(pattern: &str) -> Result<Self, regex::Error> {
        Regex::new(pattern).map(Matcher::Regex)
    }

    pub fn matches(&self, prompt: &str) -> bool {
        match self {
            Matcher::Exact(s) => prompt == s,
            Matcher::Contains(s) => prompt.contains(s.as_str()),
            Matcher::Regex(re) => re.is_match(prompt),
        }
    }
}

/// A matcher with the responses it serves in order; the last one repeats.
#[derive(Debug, Serialize, Deserialize)]
pub struct ScriptRule {
    pub matcher: Matcher,
    pub responses: Vec<String>,
    #[serde(skip)]
    cursor: AtomicUsize,
}

impl Clone for ScriptRule {
    fn clone(&self) -> Self {
        Self {
            matcher: self.matcher.clone(),
            responses: self.responses.clone(),
            cursor: AtomicUsize::new(self.cursor.load(Ordering::SeqCst)),
        }
    }
}

impl ScriptRule {
    pub fn new(matcher: Matcher, responses: Vec<String>) -> Self {
        Self {
            matcher,
            responses,
            cursor: AtomicUsize::new(0),
        }
    }

    fn next(&self) -> Option<&str> {
        let n = self.cursor.fetch_add(1, Ordering::SeqCst);
        self.responses
            .get(n)
            .or_else(|| self.responses.last())
            .map(String::as_str)
    }
}

/// On-disk script: `{"strict": true, "fallback": "...", "rules": [...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScriptFile {
    #[serde(default = "yes")]
    pub strict: bool,
    #[serde(default)]
    pub fallback: String,
    pub rules: Vec<ScriptRule>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Error)]
pub enum ScriptError {
    #[error("cannot read script {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed script {path}: {source}")]
    Malformed {
        path: String,
        source: serde_json::Error,
    },
}

/// Deterministic prompt-to-response lookup.
#[derive(Debug)]
pub struct ScriptedBackend {
    rules: Vec<ScriptRule>,
    strict: bool,
    fallback: String,
    calls: AtomicUsize,
    /// Prompts recorded with different responses by `from_transcript`.
    collisions: Vec<String>,
}

impl Clone for ScriptedBackend {
    fn clone(&self) -> Self {
        Self {
            rules: self.rules.clone(),
            strict: self.strict,
            fallback: self.fallback.clone(),
            calls: AtomicUsize::new(self.calls.load(Ordering::SeqCst)),
            collisions: self.collisions.clone(),
        }
    }
}

impl Default for ScriptedBackend {
    fn default() -> Self {
        Self::strict()
    }
}

impl ScriptedBackend {
    pub fn strict() -> Self {
        Self {
            rules: Vec::new(),
            strict: true,
            fallback: String::new(),
            calls: AtomicUsize::new(0),
            collisions: Vec::new(),
        }
    }

    pub fn lenient(fallback: impl Into<String>) -> Self {
        Self {
            strict: false,
            fallback: fallback.into(),
            ..Self::strict()
        }
    }

    pub fn rule(mut self, matcher: Matcher, response: impl Into<String>) -> Self {
        self.rules.push(ScriptRule::new(matcher, vec![response.into()]));
        self
    }

    pub fn sequence(mut self, matcher: Matcher, responses: Vec<String>) -> Self {
        self.rules.push(ScriptRule::new(matcher, responses));
        self
    }

    pub fn contains(self, needle: &str, response: impl Into<String>) -> Self {
        self.rule(Matcher::Contains(needle.to_string()), response)
    }

    pub fn from_script(file: ScriptFile) -> Self {
        Self {
            rules: file.rules,
            strict: file.strict,
            fallback: file.fallback,
            ..Self::strict()
        }
    }

    pub fn load(path: &Path) -> Result<Self, ScriptError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScriptError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let file: ScriptFile = serde_json::from_str(&text).map_err(|source| ScriptError::Malformed {
            path: path.display().to_string(),
            source,
        })?;
        Ok(Self::from_script(file))
    }

    /// Replay backend serving every recorded exchange, keyed on exact prompt
    /// text. Prompts seen more than once are answered in recorded order.
    pub fn from_transcript(transcript: &RunTranscript) -> Self {
        Self::from_transcripts(std::slice::from_ref(transcript))
    }

    pub fn from_transcripts(transcripts: &[RunTranscript]) -> Self {
        let mut backend = Self::strict();
        for exchange in transcripts.iter().flat_map(RunTranscript::exchanges) {
            let existing = backend
                .rules
                .iter_mut()
                .find(|r| matches!(&r.matcher, Matcher::Exact(p) if *p == exchange.prompt));
            match existing {
                Some(rule) => {
                    if rule.responses.iter().any(|r| *r != exchange.response) {
                        let fp = prompt_fingerprint(&exchange.prompt);
                        if !backend.collisions.contains(&fp) {
                            log::debug!("prompt {fp} recorded with differing responses; serving in order");
                            backend.collisions.push(fp);
                        }
                    }
                    rule.responses.push(exchange.response);
                }
                None => backend.rules.push(ScriptRule::new(
                    Matcher::Exact(exchange.prompt),
                    vec![exchange.response],
                )),
            }
        }
        backend
    }

    pub fn rules(&self) -> &[ScriptRule] {
        &self.rules
    }

    pub fn collisions(&self) -> &[String] {
        &self.collisions
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn lookup(&self, prompt: &str) -> Option<String> {
        self.rules
            .iter()
            .find(|r| r.matcher.matches(prompt))
            .and_then(ScriptRule::next)
            .map(str::to_string)
    }
}

impl CompletionBackend for ScriptedBackend {
    fn name(&self) -> &str {
        "scripted"
    }

    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, GatewayError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        match self.lookup(&request.prompt) {
            Some(text) => Ok(CompletionResponse::immediate(text)),
            None if self.strict => Err(GatewayError::NoScriptMatch {
                fingerprint: request.fingerprint(),
            }),
            None => Ok(CompletionResponse::immediate(self.fallback.clone())),
        }
    }
}

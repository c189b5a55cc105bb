//! Run configuration: a TOML file plus command-line overrides.

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use fsmqa_core::dataset::{DatasetKind, SamplePlan};
use fsmqa_core::fsm::FsmBudgets;
use fsmqa_core::prompt::Setting;
use fsmqa_core::strategy::StrategyRegistry;
use fsmqa_core::transcript::{RunParams, TerminatorVariant};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::CliError;

/// Environment variable holding the API credential unless the config names another.
pub const DEFAULT_KEY_ENV: &str = "FSMQA_API_KEY";
/// Overrides the configured HTTP endpoint when set.
pub const ENDPOINT_ENV: &str = "FSMQA_ENDPOINT";

fn display_ser<T: std::fmt::Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

fn kind_de<'de, D: Deserializer<'de>>(d: D) -> Result<DatasetKind, D::Error> {
    let s = String::deserialize(d)?;
    DatasetKind::from_str(&s).map_err(serde::de::Error::custom)
}

/// Accepts `1`, `"1"` or `"s1"`.
fn setting_de<'de, D: Deserializer<'de>>(d: D) -> Result<Setting, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Int(u64),
        Str(String),
    }
    let text = match Raw::deserialize(d)? {
        Raw::Int(n) => n.to_string(),
        Raw::Str(s) => s,
    };
    Setting::from_str(&text).map_err(serde::de::Error::custom)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum BackendConfig {
    /// Canned responses from a script file; no network.
    Scripted { script: PathBuf },
    /// Any endpoint speaking the OpenAI chat-completions format.
    Openai {
        endpoint: String,
        model: String,
        #[serde(default)]
        temperature: f32,
        #[serde(default = "default_max_tokens")]
        max_tokens: u32,
        #[serde(default = "default_key_env")]
        api_key_env: String,
        #[serde(default = "default_request_timeout")]
        request_timeout_secs: u64,
        #[serde(default = "default_retries")]
        max_retries: u32,
        #[serde(default)]
        min_interval_ms: u64,
    },
}

fn default_max_tokens() -> u32 {
    1024
}
fn default_key_env() -> String {
    DEFAULT_KEY_ENV.into()
}
fn default_request_timeout() -> u64 {
    120
}
fn default_retries() -> u32 {
    3
}
fn default_concurrency() -> usize {
    1
}
fn default_record_timeout() -> u64 {
    600
}

impl BackendConfig {
    pub fn openai(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        BackendConfig::Openai {
            endpoint: endpoint.into(),
            model: model.into(),
            temperature: 0.0,
            max_tokens: default_max_tokens(),
            api_key_env: default_key_env(),
            request_timeout_secs: default_request_timeout(),
            max_retries: default_retries(),
            min_interval_ms: 0,
        }
    }

    /// `http(s)://…` selects the HTTP backend, anything else is a script path.
    pub fn from_flag(value: &str, model: Option<&str>) -> Self {
        if value.starts_with("http://") || value.starts_with("https://") {
            BackendConfig::openai(value, model.unwrap_or("gpt-3.5-turbo"))
        } else {
            BackendConfig::Scripted {
                script: PathBuf::from(value),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: PathBuf,
    #[serde(serialize_with = "display_ser", deserialize_with = "kind_de")]
    pub kind: DatasetKind,
    pub strategy: String,
    #[serde(serialize_with = "display_ser", deserialize_with = "setting_de")]
    pub setting: Setting,
    pub backend: BackendConfig,
    #[serde(default)]
    pub budgets: FsmBudgets,
    #[serde(default)]
    pub terminator: TerminatorVariant,
    /// `None` runs every record in file order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample: Option<SamplePlan>,
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
    pub out: PathBuf,
    #[serde(default = "default_record_timeout")]
    pub record_timeout_secs: u64,
}

/// Fields that feed the resume hash. Concurrency, output location and
/// timeouts may change between invocations without invalidating results.
#[derive(Serialize)]
struct Hashed<'a> {
    dataset: &'a Path,
    kind: &'a str,
    strategy: &'a str,
    setting: String,
    backend: &'a BackendConfig,
    budgets: &'a FsmBudgets,
    terminator: &'a TerminatorVariant,
    sample: &'a Option<SamplePlan>,
}

impl RunConfig {
    pub fn new(dataset: impl Into<PathBuf>, kind: DatasetKind, strategy: &str, backend: BackendConfig, out: impl Into<PathBuf>) -> Self {
        Self {
            dataset: dataset.into(),
            kind,
            strategy: strategy.to_string(),
            setting: Setting::S1,
            backend,
            budgets: FsmBudgets::default(),
            terminator: TerminatorVariant::default(),
            sample: None,
            concurrency: default_concurrency(),
            out: out.into(),
            record_timeout_secs: default_record_timeout(),
        }
    }

    /// Parses a TOML file; relative paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config: RunConfig =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        rebase(&mut config.dataset);
        rebase(&mut config.out);
        if let BackendConfig::Scripted { script } = &mut config.backend {
            rebase(script);
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let strategy = self.strategy.to_ascii_lowercase();
        if StrategyRegistry::builtin().get(&strategy).is_none() {
            return Err(CliError::Config(format!(
                "unknown strategy `{}` (expected one of {})",
                self.strategy,
                StrategyRegistry::builtin().names().join(", ")
            )));
        }
        self.budgets
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        if self.concurrency == 0 {
            return Err(CliError::Config("concurrency must be at least 1".into()));
        }
        if self.record_timeout_secs == 0 {
            return Err(CliError::Config("record_timeout_secs must be positive".into()));
        }
        if let BackendConfig::Openai { endpoint, .. } = &self.backend {
            if !(endpoint.starts_with("http://") || endpoint.starts_with("https://")) {
                return Err(CliError::Config(format!("endpoint `{endpoint}` is not an http(s) URL")));
            }
        }
        Ok(())
    }

    /// Applies the endpoint override from the environment.
    pub fn apply_env(&mut self) {
        if let (Ok(endpoint), BackendConfig::Openai { endpoint: current, .. }) =
            (std::env::var(ENDPOINT_ENV), &mut self.backend)
        {
            if !endpoint.is_empty() {
                *current = endpoint;
            }
        }
    }

    pub fn params(&self) -> RunParams {
        RunParams {
            setting: self.setting,
            budgets: self.budgets,
            terminator: self.terminator,
        }
    }

    pub fn record_timeout(&self) -> Duration {
        Duration::from_secs(self.record_timeout_secs)
    }

    /// Hex SHA-256 over the result-affecting fields.
    pub fn hash(&self) -> String {
        let hashed = Hashed {
            dataset: &self.dataset,
            kind: self.kind.as_str(),
            strategy: &self.strategy.to_ascii_lowercase(),
            setting: self.setting.to_string(),
            backend: &self.backend,
            budgets: &self.budgets,
            terminator: &self.terminator,
            sample: &self.sample,
        };
        let json = serde_json::to_vec(&hashed).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOML: &str = r#"
dataset = "data/musique.jsonl"
kind = "musique"
strategy = "sg-fsm2"
setting = 2
out = "runs/a"
concurrency = 4

[sample]
size = 10
seed = 7

[budgets]
max_iterations = 5
max_revisions_per_output = 1

[backend]
type = "openai"
endpoint = "http://localhost:8000/v1"
model = "llama"
"#;

    #[test]
    fn parses_and_rebases() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, TOML).unwrap();
        let c = RunConfig::load(&path).unwrap();
        assert_eq!(c.kind, DatasetKind::Musique);
        assert_eq!(c.setting, Setting::S2);
        assert_eq!(c.sample, Some(SamplePlan { size: 10, seed: 7 }));
        assert_eq!(c.budgets.max_iterations, 5);
        assert_eq!(c.dataset, dir.path().join("data/musique.jsonl"));
        assert_eq!(c.record_timeout_secs, 600);
        assert!(matches!(&c.backend, BackendConfig::Openai { model, api_key_env, .. } if model == "llama" && api_key_env == DEFAULT_KEY_ENV));
        c.validate().unwrap();
    }

    #[test]
    fn snapshot_roundtrips_through_json() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, TOML).unwrap();
        let c = RunConfig::load(&path).unwrap();
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn hash_ignores_operational_fields() {
        let base = RunConfig::new("d.json", DatasetKind::HotpotQA, "cot", BackendConfig::from_flag("s.json", None), "out");
        let mut other = base.clone();
        other.concurrency = 8;
        other.out = "elsewhere".into();
        other.record_timeout_secs = 5;
        assert_eq!(base.hash(), other.hash());
        other.setting = Setting::S2;
        assert_ne!(base.hash(), other.hash());
    }

    #[test]
    fn rejects_bad_values() {
        let mut c = RunConfig::new("d.json", DatasetKind::HotpotQA, "nope", BackendConfig::from_flag("s.json", None), "out");
        assert!(c.validate().is_err());
        c.strategy = "SG-FSM1".into();
        c.validate().unwrap();
        c.concurrency = 0;
        assert!(c.validate().is_err());
        assert!(toml::from_str::<RunConfig>("dataset='a'\nkind='x'\nstrategy='cot'\nsetting=1\nout='o'\n[backend]\ntype='scripted'\nscript='s'").is_err());
    }

    #[test]
    fn backend_flag() {
        assert!(matches!(BackendConfig::from_flag("https://api.example/v1", Some("m")), BackendConfig::Openai { model, .. } if model == "m"));
        assert!(matches!(BackendConfig::from_flag("fixtures/s.json", None), BackendConfig::Scripted { .. }));
    }
}

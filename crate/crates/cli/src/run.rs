//! `run`: sample, execute with a bounded worker pool, persist, resume.

use std::net::{TcpStream, ToSocketAddrs};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{mpsc, Arc};
use std::time::Duration;

use fsmqa_core::dataset::{self, read_cache, write_cache, QuestionRecord};
use fsmqa_core::gateway::{
    CompletionBackend, Deadline, Gateway, ModelSettings, OpenAiBackend, OpenAiConfig, RetryPolicy, ScriptedBackend,
};
use fsmqa_core::prompt::PromptKit;
use fsmqa_core::strategy::{run_fsm1, run_fsm2, RunContext, StrategyRegistry};
use fsmqa_core::transcript::RunTranscript;

use crate::config::{BackendConfig, RunConfig};
use crate::evaluate::cmd_eval;
use crate::fsio::{append_jsonl, transcript_path, write_json_atomic, RECORDS, TRANSCRIPT_LOG};
use crate::manifest::{RecordStatus, RunManifest};
use crate::{exit, CliError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunSummary {
    pub run_dir: PathBuf,
    /// Records executed by this invocation.
    pub executed: usize,
    pub done: usize,
    pub failed: usize,
    pub pending: usize,
    pub reports_written: bool,
    /// Highest number of records in flight at once.
    pub peak_concurrency: usize,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        if self.failed == 0 && self.pending == 0 && self.reports_written {
            exit::OK
        } else {
            exit::INCOMPLETE
        }
    }
}

/// Builds the configured backend and executes the run.
pub fn cmd_run(config: &RunConfig, limit: Option<usize>) -> Result<RunSummary, CliError> {
    config.validate()?;
    let backend = build_backend(&config.backend)?;
    execute_with_backend(config, backend, limit)
}

pub fn build_backend(backend: &BackendConfig) -> Result<Arc<dyn CompletionBackend>, CliError> {
    match backend {
        BackendConfig::Scripted { script } => {
            let b = ScriptedBackend::load(script).map_err(|e| CliError::Config(e.to_string()))?;
            Ok(Arc::new(b))
        }
        BackendConfig::Openai {
            endpoint,
            api_key_env,
            max_retries,
            min_interval_ms,
            ..
        } => {
            preflight(endpoint)?;
            let mut config = OpenAiConfig::new(endpoint.clone()).with_key_from_env(api_key_env);
            if config.api_key.is_none() {
                log::warn!("{api_key_env} is not set; sending requests without a credential");
            }
            config.retry = RetryPolicy {
                max_retries: *max_retries,
                ..RetryPolicy::default()
            };
            config.min_interval = Duration::from_millis(*min_interval_ms);
            Ok(Arc::new(OpenAiBackend::new(config)))
        }
    }
}

fn model_settings(backend: &BackendConfig) -> ModelSettings {
    match backend {
        BackendConfig::Scripted { .. } => ModelSettings::default(),
        BackendConfig::Openai {
            model,
            temperature,
            max_tokens,
            request_timeout_secs,
            ..
        } => ModelSettings {
            model_id: model.clone(),
            temperature: *temperature,
            max_tokens: *max_tokens,
            timeout: Duration::from_secs(*request_timeout_secs),
            ..ModelSettings::default()
        },
    }
}

/// TCP reachability of the endpoint's host, so a dead endpoint fails the
/// run up front instead of failing every record.
fn preflight(endpoint: &str) -> Result<(), CliError> {
    let (rest, default_port) = match endpoint.split_once("://") {
        Some(("https", rest)) => (rest, 443),
        Some((_, rest)) => (rest, 80),
        None => (endpoint, 80),
    };
    let authority = rest.split('/').next().unwrap_or(rest);
    let authority = authority.rsplit('@').next().unwrap_or(authority);
    let target = match authority.rsplit_once(':') {
        Some((_, port)) if port.chars().all(|c| c.is_ascii_digit()) && !authority.ends_with(']') => authority.to_string(),
        _ => format!("{authority}:{default_port}"),
    };
    let unreachable = |m: String| CliError::BackendUnreachable(format!("{endpoint}: {m}"));
    let addrs: Vec<_> = target.to_socket_addrs().map_err(|e| unreachable(e.to_string()))?.collect();
    let mut last = String::from("no address");
    for addr in addrs {
        match TcpStream::connect_timeout(&addr, Duration::from_secs(5)) {
            Ok(_) => return Ok(()),
            Err(e) => last = e.to_string(),
        }
    }
    Err(unreachable(last))
}

/// Loads the manifest and record cache, or samples and creates them.
fn prepare(config: &RunConfig) -> Result<(RunManifest, Vec<QuestionRecord>), CliError> {
    let dir = &config.out;
    if let Some(manifest) = RunManifest::load(dir)? {
        manifest.check_resumable(config, dir)?;
        let records = read_cache(&dir.join(RECORDS))?;
        let ids: Vec<&str> = records.iter().map(|r| r.id.as_str()).collect();
        let expected: Vec<&str> = manifest.records.iter().map(|r| r.id.as_str()).collect();
        if ids != expected {
            return Err(CliError::artifact(dir.join(RECORDS), "record cache does not match the manifest"));
        }
        log::info!(
            "resuming {}: {} done, {} to go",
            dir.display(),
            manifest.count(RecordStatus::Done),
            manifest.records.len() - manifest.count(RecordStatus::Done)
        );
        return Ok((manifest, records));
    }
    std::fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    let all = dataset::load(&config.dataset, config.kind)?;
    let records = match config.sample {
        Some(plan) => dataset::sample(&all, plan)?,
        None => all,
    };
    let cache = dir.join(RECORDS);
    let tmp = dir.join(format!("{RECORDS}.tmp"));
    write_cache(&tmp, &records)?;
    std::fs::rename(&tmp, &cache).map_err(CliError::io(&cache))?;
    let manifest = RunManifest::new(config, records.iter().map(|r| r.id.clone()));
    manifest.save(dir)?;
    Ok((manifest, records))
}

/// Stage composition: `sg-fsm2` runs stage 1 once and keeps both transcripts.
fn execute_record(record: &QuestionRecord, strategy: &str, registry: &StrategyRegistry, ctx: &RunContext<'_>) -> Vec<RunTranscript> {
    if strategy == "sg-fsm2" {
        let stage1 = run_fsm1(record, ctx);
        let stage2 = run_fsm2(stage1.clone(), record, ctx);
        return vec![stage1, stage2];
    }
    let s = registry.get(strategy).expect("strategy validated");
    vec![s.run(record, ctx)]
}

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    payload
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| payload.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "unknown panic".into())
}

/// Runs pending records of `config` against `backend`; `limit` caps how many
/// this invocation executes.
pub fn execute_with_backend(
    config: &RunConfig,
    backend: Arc<dyn CompletionBackend>,
    limit: Option<usize>,
) -> Result<RunSummary, CliError> {
    config.validate()?;
    let dir = config.out.clone();
    let (mut manifest, records) = prepare(config)?;
    let strategy = config.strategy.to_ascii_lowercase();
    let registry = StrategyRegistry::builtin();
    let kit = PromptKit::builtin();
    let gateway = Gateway::new(backend, model_settings(&config.backend)).with_inflight_limit(config.concurrency);
    let params = config.params();
    let timeout = config.record_timeout();

    let pending: Vec<&QuestionRecord> = records
        .iter()
        .filter(|r| !manifest.is_done(&r.id))
        .take(limit.unwrap_or(usize::MAX))
        .collect();
    let workers = config.concurrency.min(pending.len());
    let next = AtomicUsize::new(0);
    let in_flight = AtomicUsize::new(0);
    let peak = AtomicUsize::new(0);
    let total = pending.len();
    let log_path = dir.join(TRANSCRIPT_LOG);

    let mut write_error = None;
    std::thread::scope(|scope| {
        let (tx, rx) = mpsc::channel::<(String, Result<Vec<RunTranscript>, String>)>();
        for _ in 0..workers {
            let tx = tx.clone();
            let (pending, next, in_flight, peak) = (&pending, &next, &in_flight, &peak);
            let (registry, kit, gateway, strategy) = (&registry, &kit, &gateway, strategy.as_str());
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(record) = pending.get(i) else { break };
                let now = in_flight.fetch_add(1, Ordering::SeqCst) + 1;
                peak.fetch_max(now, Ordering::SeqCst);
                let deadline = Deadline::new(gateway, timeout);
                let ctx = RunContext {
                    kit,
                    model: &deadline,
                    params,
                };
                let outcome = catch_unwind(AssertUnwindSafe(|| execute_record(record, strategy, registry, &ctx)))
                    .map_err(panic_message);
                in_flight.fetch_sub(1, Ordering::SeqCst);
                if tx.send((record.id.clone(), outcome)).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        // Single writer for transcripts, the log and the manifest.
        for (n, (id, outcome)) in rx.into_iter().enumerate() {
            if write_error.is_some() {
                continue;
            }
            let result = persist(&dir, &log_path, &mut manifest, &id, outcome);
            match result {
                Ok(status) => log::info!("[{}/{total}] {id}: {status:?}", n + 1),
                Err(e) => write_error = Some(e),
            }
        }
    });
    if let Some(e) = write_error {
        return Err(e);
    }

    let reports_written = match cmd_eval(&dir) {
        Ok(_) => true,
        Err(e) => {
            log::error!("scoring failed: {e}");
            false
        }
    };
    Ok(RunSummary {
        run_dir: dir,
        executed: total,
        done: manifest.count(RecordStatus::Done),
        failed: manifest.count(RecordStatus::Failed),
        pending: manifest.count(RecordStatus::Pending),
        reports_written,
        peak_concurrency: peak.load(Ordering::SeqCst),
    })
}

fn persist(
    dir: &Path,
    log_path: &Path,
    manifest: &mut RunManifest,
    id: &str,
    outcome: Result<Vec<RunTranscript>, String>,
) -> Result<RecordStatus, CliError> {
    let (status, error) = match outcome {
        Ok(transcripts) => {
            for t in &transcripts {
                write_json_atomic(&transcript_path(dir, &t.strategy, &t.record_id), t)?;
                append_jsonl(log_path, t)?;
            }
            match transcripts.iter().find_map(|t| t.incomplete.clone()) {
                None => (RecordStatus::Done, None),
                Some(reason) => (RecordStatus::Failed, Some(reason)),
            }
        }
        Err(panic) => (RecordStatus::Failed, Some(format!("strategy panicked: {panic}"))),
    };
    let entry = manifest
        .entry_mut(id)
        .ok_or_else(|| CliError::artifact(dir.join("manifest.json"), format!("unknown record {id}")))?;
    entry.status = status;
    entry.error = error;
    entry.attempts += 1;
    manifest.save(dir)?;
    Ok(status)
}

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use fsmqa_cli::config::{BackendConfig, RunConfig};
use fsmqa_core::dataset::DatasetKind;
use fsmqa_core::gateway::{CompletionBackend, CompletionRequest, CompletionResponse, GatewayError, ScriptedBackend};
use fsmqa_core::prompt::Setting;

pub fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

pub fn core_data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data").join(name)
}

pub fn direct_config(out: &Path, setting: Setting) -> RunConfig {
    let mut c = RunConfig::new(
        data("hotpot5.json"),
        DatasetKind::HotpotQA,
        "direct",
        BackendConfig::Scripted {
            script: data("direct.script.json"),
        },
        out,
    );
    c.setting = setting;
    c
}

/// Counts concurrent `complete` calls on top of another backend.
pub struct Instrumented<B> {
    pub inner: B,
    pub delay: Duration,
    now: AtomicUsize,
    pub max: AtomicUsize,
    pub calls: AtomicUsize,
}

impl<B> Instrumented<B> {
    pub fn new(inner: B, delay: Duration) -> Self {
        Self {
            inner,
            delay,
            now: AtomicUsize::new(0),
            max: AtomicUsize::new(0),
            calls: AtomicUsize::new(0),
        }
    }

    pub fn max_seen(&self) -> usize {
        self.max.load(Ordering::SeqCst)
    }
}

impl<B: CompletionBackend> CompletionBackend for Instrumented<B> {
    fn name(&self) -> &str {
        "instrumented"
    }

    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, GatewayError> {
        let n = self.now.fetch_add(1, Ordering::SeqCst) + 1;
        self.max.fetch_max(n, Ordering::SeqCst);
        self.calls.fetch_add(1, Ordering::SeqCst);
        std::thread::sleep(self.delay);
        let out = self.inner.complete(request);
        self.now.fetch_sub(1, Ordering::SeqCst);
        out
    }
}

pub fn direct_backend() -> ScriptedBackend {
    ScriptedBackend::load(&data("direct.script.json")).unwrap()
}

pub fn copy_dir(from: &Path, to: &Path) {
    std::fs::create_dir_all(to).unwrap();
    for entry in std::fs::read_dir(from).unwrap() {
        let entry = entry.unwrap();
        let target = to.join(entry.file_name());
        if entry.file_type().unwrap().is_dir() {
            copy_dir(&entry.path(), &target);
        } else {
            std::fs::copy(entry.path(), target).unwrap();
        }
    }
}

/// Every frozen transcript under tests/data/runs.
pub fn fixture_transcripts() -> Vec<PathBuf> {
    fn walk(dir: &Path, out: &mut Vec<PathBuf>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(&path, out);
            } else if path.extension().is_some_and(|e| e == "json") && path.components().any(|c| c.as_os_str() == "transcripts") {
                out.push(path);
            }
        }
    }
    let mut out = Vec::new();
    walk(&data("runs"), &mut out);
    out.sort();
    out
}

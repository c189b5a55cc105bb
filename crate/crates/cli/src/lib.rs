//! Run orchestration behind the `fsmqa` binary: configuration, resumable
//! batch execution, scoring and transcript replay.

pub mod config;
pub mod evaluate;
pub mod fsio;
pub mod inspect;
pub mod manifest;
pub mod replay;
pub mod run;

use std::path::PathBuf;

use thiserror::Error;

pub use config::{BackendConfig, RunConfig};
pub use evaluate::{cmd_eval, EvalOutcome};
pub use manifest::{RecordStatus, RunManifest};
pub use replay::{cmd_replay, Divergence, ReplayReport};
pub use run::{cmd_run, execute_with_backend, RunSummary};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Dataset(#[from] fsmqa_core::dataset::DatasetError),
    #[error("backend unreachable: {0}")]
    BackendUnreachable(String),
    #[error("manifest in {dir} was written for config {found}, current config hashes to {expected}; use a fresh --out directory")]
    ManifestMismatch {
        dir: PathBuf,
        expected: String,
        found: String,
    },
    #[error("{path}: {message}")]
    Artifact { path: PathBuf, message: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    pub(crate) fn artifact(path: impl Into<PathBuf>, message: impl ToString) -> CliError {
        CliError::Artifact {
            path: path.into(),
            message: message.to_string(),
        }
    }
}

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const ERROR: i32 = 1;
    /// Some requested records are not done.
    pub const INCOMPLETE: i32 = 2;
    pub const DIVERGED: i32 = 3;
}

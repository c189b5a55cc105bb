use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::fsio::{read_json, write_json_atomic, MANIFEST};
use crate::CliError;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordStatus {
    Pending,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordEntry {
    pub id: String,
    pub status: RecordStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Executions so far, including failed ones.
    #[serde(default)]
    pub attempts: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub config_hash: String,
    pub config: RunConfig,
    /// Sample order.
    pub records: Vec<RecordEntry>,
}

impl RunManifest {
    pub fn new(config: &RunConfig, ids: impl IntoIterator<Item = String>) -> Self {
        Self {
            schema_version: MANIFEST_SCHEMA_VERSION,
            config_hash: config.hash(),
            config: config.clone(),
            records: ids
                .into_iter()
                .map(|id| RecordEntry {
                    id,
                    status: RecordStatus::Pending,
                    error: None,
                    attempts: 0,
                })
                .collect(),
        }
    }

    pub fn load(run_dir: &Path) -> Result<Option<Self>, CliError> {
        let path = run_dir.join(MANIFEST);
        if !path.exists() {
            return Ok(None);
        }
        let manifest: RunManifest = read_json(&path)?;
        if manifest.schema_version != MANIFEST_SCHEMA_VERSION {
            return Err(CliError::artifact(path, format!("unsupported manifest version {}", manifest.schema_version)));
        }
        Ok(Some(manifest))
    }

    pub fn save(&self, run_dir: &Path) -> Result<(), CliError> {
        write_json_atomic(&run_dir.join(MANIFEST), self)
    }

    /// Refuses to resume under a config that would change results.
    pub fn check_resumable(&self, config: &RunConfig, run_dir: &Path) -> Result<(), CliError> {
        let expected = config.hash();
        if self.config_hash != expected {
            return Err(CliError::ManifestMismatch {
                dir: run_dir.to_path_buf(),
                expected,
                found: self.config_hash.clone(),
            });
        }
        Ok(())
    }

    pub fn entry_mut(&mut self, id: &str) -> Option<&mut RecordEntry> {
        self.records.iter_mut().find(|r| r.id == id)
    }

    pub fn count(&self, status: RecordStatus) -> usize {
        self.records.iter().filter(|r| r.status == status).count()
    }

    pub fn all_done(&self) -> bool {
        self.records.iter().all(|r| r.status == RecordStatus::Done)
    }

    pub fn is_done(&self, id: &str) -> bool {
        self.records.iter().any(|r| r.id == id && r.status == RecordStatus::Done)
    }
}

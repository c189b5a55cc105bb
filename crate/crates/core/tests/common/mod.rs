#![allow(dead_code)]

pub mod taxonomy_cases;

use std::path::PathBuf;

use fsmqa_core::dataset::{load, DatasetKind, QuestionRecord};
use fsmqa_core::gateway::{Gateway, ScriptedBackend};
use fsmqa_core::prompt::PromptKit;
use fsmqa_core::strategy::{RunContext, Strategy};
use fsmqa_core::transcript::{RunParams, RunTranscript};

pub fn data(name: &str) -> PathBuf {
    // Resolves from either workspace crate.
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data").join(name)
}

pub fn blind_shaft() -> QuestionRecord {
    load(&data("twowiki_fixture.json"), DatasetKind::TwoWiki)
        .unwrap()
        .into_iter()
        .find(|r| r.id == "blind_shaft")
        .unwrap()
}

pub fn blind_shaft_backend() -> ScriptedBackend {
    ScriptedBackend::load(&data("blind_shaft.script.json")).unwrap()
}

pub fn run(strategy: &dyn Strategy, record: &QuestionRecord, backend: ScriptedBackend, params: RunParams) -> RunTranscript {
    let kit = PromptKit::builtin();
    let gw = Gateway::scripted(backend);
    let ctx = RunContext {
        kit: &kit,
        model: &gw,
        params,
    };
    strategy.run(record, &ctx)
}

//! Regenerates the frozen replay fixtures under tests/data/runs.
//!
//! cargo run -p fsmqa-cli --example record_fixtures

use std::path::{Path, PathBuf};

use fsmqa_cli::config::{BackendConfig, RunConfig};
use fsmqa_cli::fsio::{RECORDS, TRANSCRIPTS_DIR};
use fsmqa_cli::cmd_run;
use fsmqa_core::dataset::DatasetKind;
use fsmqa_core::gateway::stub::StubServer;
use fsmqa_core::gateway::ScriptedBackend;
use fsmqa_core::prompt::Setting;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn core_data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data").join(name)
}

fn copy_dir(from: &Path, to: &Path) {
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

/// Runs `config` and keeps only the record cache and transcripts.
fn record(name: &str, config: RunConfig) {
    let summary = cmd_run(&config, None).unwrap();
    assert_eq!(summary.exit_code(), 0, "{name} did not finish");
    let dest = data("runs").join(name);
    let _ = std::fs::remove_dir_all(&dest);
    std::fs::create_dir_all(&dest).unwrap();
    std::fs::copy(config.out.join(RECORDS), dest.join(RECORDS)).unwrap();
    copy_dir(&config.out.join(TRANSCRIPTS_DIR), &dest.join(TRANSCRIPTS_DIR));
    println!("wrote {}", dest.display());
}

fn main() {
    let tmp = tempfile::tempdir().unwrap();

    // Blind Shaft question only; the script answers nothing else.
    let blind_json = tmp.path().join("blind.json");
    let raw: Vec<serde_json::Value> = serde_json::from_str::<Vec<serde_json::Value>>(
        &std::fs::read_to_string(core_data("twowiki_fixture.json")).unwrap(),
    )
    .unwrap()
    .into_iter()
    .filter(|v| v["_id"] == "blind_shaft")
    .collect();
    std::fs::write(&blind_json, serde_json::to_vec(&raw).unwrap()).unwrap();

    let script = BackendConfig::Scripted {
        script: core_data("blind_shaft.script.json"),
    };
    for (name, strategy, setting) in [("blind-shaft-s1", "sg-fsm2", Setting::S1), ("blind-shaft-s2", "sg-fsm2", Setting::S2)] {
        let mut c = RunConfig::new(&blind_json, DatasetKind::TwoWiki, strategy, script.clone(), tmp.path().join(name));
        c.setting = setting;
        record(name, c);
    }

    let direct = BackendConfig::Scripted {
        script: data("direct.script.json"),
    };
    let mut c = RunConfig::new(data("hotpot5.json"), DatasetKind::HotpotQA, "direct", direct, tmp.path().join("direct"));
    c.setting = Setting::S2;
    record("direct-s2", c);

    let c = RunConfig::new(
        data("hotpot5.json"),
        DatasetKind::HotpotQA,
        "sg-fsm1",
        BackendConfig::Scripted {
            script: data("continue.script.json"),
        },
        tmp.path().join("withdraw"),
    );
    record("withdraw", c);

    // Same Blind Shaft exchanges, but over HTTP through the stub server.
    let stub = StubServer::scripted(ScriptedBackend::load(&core_data("blind_shaft.script.json")).unwrap()).unwrap();
    let mut c = RunConfig::new(
        &blind_json,
        DatasetKind::TwoWiki,
        "sg-fsm2",
        BackendConfig::openai(stub.endpoint(), "stub-model"),
        tmp.path().join("http"),
    );
    c.setting = Setting::S2;
    record("blind-shaft-http", c);
}

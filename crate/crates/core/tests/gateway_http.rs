mod common;

use std::sync::Arc;
use std::time::Duration;

use common::{blind_shaft, blind_shaft_backend};
use fsmqa_core::gateway::stub::{StubReply, StubServer};
use fsmqa_core::gateway::{
    CompletionBackend, Gateway, GatewayError, ModelCall, ModelSettings, OpenAiBackend, OpenAiConfig, RetryPolicy,
    ScriptedBackend,
};
use fsmqa_core::prompt::{PromptKit, Role, Setting};
use fsmqa_core::strategy::{RunContext, SgFsm, Strategy};
use fsmqa_core::transcript::RunParams;

fn fast_retry() -> RetryPolicy {
    RetryPolicy {
        max_retries: 3,
        base_delay: Duration::from_millis(5),
        max_delay: Duration::from_millis(20),
    }
}

fn http_gateway(stub: &StubServer) -> Gateway {
    let mut config = OpenAiConfig::new(stub.endpoint());
    config.retry = fast_retry();
    config.api_key = Some("test-key".into());
    let settings = ModelSettings {
        model_id: "stub-model".into(),
        ..ModelSettings::default()
    };
    Gateway::new(Arc::new(OpenAiBackend::new(config)), settings)
}

#[test]
fn rate_limit_retries_then_succeeds() {
    let stub = StubServer::sequence(vec![
        StubReply::status(429),
        StubReply::status(429),
        StubReply::completion("{\"answer\": \"ok\"}"),
    ])
    .unwrap();
    let gw = http_gateway(&stub);
    let resp = gw.call(Role::Direct, "hello").unwrap();
    assert_eq!(resp.text, "{\"answer\": \"ok\"}");
    assert_eq!(resp.retry_count, 2);
    let reqs = stub.requests();
    assert_eq!(reqs.len(), 3);
    assert_eq!(reqs[0]["model"], "stub-model");
    assert_eq!(reqs[0]["temperature"], 0.0);
    let user = reqs[0]["messages"].as_array().unwrap().last().unwrap();
    assert_eq!(user["content"], "hello");
}

#[test]
fn rate_limit_exhaustion() {
    let stub = StubServer::sequence(vec![StubReply::status(429)]).unwrap();
    let err = http_gateway(&stub).call(Role::Direct, "hello").unwrap_err();
    assert!(matches!(err, GatewayError::RateLimitedExhausted { attempts: 4, .. }), "{err:?}");
    assert_eq!(stub.requests().len(), 4);
}

#[test]
fn server_errors_are_retried() {
    let stub = StubServer::sequence(vec![StubReply::status(503), StubReply::completion("fine")]).unwrap();
    let resp = http_gateway(&stub).call(Role::Direct, "x").unwrap();
    assert_eq!((resp.text.as_str(), resp.retry_count), ("fine", 1));
}

#[test]
fn auth_failure_is_not_retried() {
    let stub = StubServer::sequence(vec![StubReply::status(401)]).unwrap();
    let err = http_gateway(&stub).call(Role::Direct, "x").unwrap_err();
    assert!(matches!(err, GatewayError::AuthFailure { status: 401, .. }));
    assert_eq!(stub.requests().len(), 1);
    assert!(err.to_string().contains("credential"));
}

#[test]
fn client_errors_surface_without_retry() {
    let stub = StubServer::sequence(vec![StubReply::status(400)]).unwrap();
    let err = http_gateway(&stub).call(Role::Direct, "x").unwrap_err();
    assert!(matches!(err, GatewayError::Http { status: 400, .. }));
    assert_eq!(stub.requests().len(), 1);
}

#[test]
fn garbage_payload_is_reported() {
    let stub = StubServer::sequence(vec![StubReply {
        status: 200,
        body: "not json".into(),
    }])
    .unwrap();
    let err = http_gateway(&stub).call(Role::Direct, "x").unwrap_err();
    assert!(matches!(err, GatewayError::BadPayload { .. }), "{err:?}");
}

#[test]
fn unreachable_endpoint_is_transport_error() {
    let endpoint = {
        let stub = StubServer::sequence(vec![]).unwrap();
        stub.endpoint()
    };
    let mut config = OpenAiConfig::new(endpoint);
    config.retry = RetryPolicy {
        max_retries: 1,
        ..fast_retry()
    };
    let backend = OpenAiBackend::new(config);
    let req = ModelSettings::default().request(Role::Direct, "x");
    let err = backend.complete(&req).unwrap_err();
    assert!(
        matches!(err, GatewayError::Transport { attempts: 2, .. } | GatewayError::Timeout { attempts: 2, .. }),
        "{err:?}"
    );
}

#[test]
fn recorded_http_run_replays_identically() {
    let stub = StubServer::scripted(blind_shaft_backend()).unwrap();
    let gw = http_gateway(&stub);
    let kit = PromptKit::builtin();
    let params = RunParams {
        setting: Setting::S2,
        ..RunParams::default()
    };
    let record = blind_shaft();
    let live = SgFsm::stage2().run(
        &record,
        &RunContext {
            kit: &kit,
            model: &gw,
            params,
        },
    );
    assert!(live.is_complete(), "{:?}", live.incomplete);
    assert_eq!(live.final_answer.as_deref(), Some("The Mask of Fu Manchu"));

    let replay_gw = Gateway::scripted(ScriptedBackend::from_transcript(&live));
    let replayed = SgFsm::stage2().run(
        &record,
        &RunContext {
            kit: &kit,
            model: &replay_gw,
            params,
        },
    );
    assert_eq!(replayed.without_timing(), live.without_timing());
    let fp = |t: &fsmqa_core::transcript::RunTranscript| {
        t.exchanges().iter().map(|e| fsmqa_core::transcript::fingerprint(&e.prompt, &e.response)).collect::<Vec<_>>()
    };
    assert_eq!(fp(&replayed), fp(&live));
}

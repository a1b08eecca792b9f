//! Remote interpreter client against a replaying mock backend.
//!
//! `fixtures/remote_mixed.json` pins one request/response exchange. The mock
//! checks the incoming request against it and answers with the pinned
//! response, so no test leaves the loopback interface.

#![cfg(feature = "remote")]

mod common;

use std::time::{Duration, Instant};

use axum::routing::post;
use axum::{Json, Router};
use common::{fixture, shared, spawn, spawn_service, MIXED};
use drivesim::backend::{BackendError, InterpreterBackend};
use drivesim::core::dsl::parse_command;
use drivesim::core::render::NoRender;
use drivesim::remote::{RemoteError, RemoteInterpreter};
use serde_json::{json, Value};

async fn replay_backend() -> String {
    let pinned = fixture("remote_mixed.json");
    let app = Router::new().route(
        "/interpret",
        post(move |Json(req): Json<Value>| {
            let pinned = pinned.clone();
            async move {
                assert_eq!(req["command"], pinned["request"]["command"]);
                assert_eq!(req["round"], pinned["request"]["round"]);
                assert!(req["prompt"].as_str().is_some_and(|p| !p.is_empty()));
                assert_eq!(req["schema"]["required"], json!(["configs"]));
                Json(pinned["response"].clone())
            }
        }),
    );
    format!("http://{}/interpret", spawn(app).await)
}

async fn fixed_backend(body: Value) -> String {
    let app = Router::new().route("/interpret", post(move || async move { Json(body) }));
    format!("http://{}/interpret", spawn(app).await)
}

#[tokio::test]
async fn replayed_answer_matches_the_grammar() {
    let client = RemoteInterpreter::new(&InterpreterBackend::remote(&replay_backend().await, 5.0)).unwrap();
    let configs = client.interpret(MIXED, 0).await.unwrap();
    assert_eq!(configs.len(), 4);
    assert_eq!(configs, parse_command(MIXED, 0).unwrap());
}

#[tokio::test]
async fn missing_action_is_a_schema_violation() {
    let mut doc = fixture("remote_mixed.json")["response"].clone();
    doc["configs"][1].as_object_mut().unwrap().remove("action");
    let client = RemoteInterpreter::new(&InterpreterBackend::remote(&fixed_backend(doc).await, 5.0)).unwrap();
    match client.interpret(MIXED, 0).await {
        Err(RemoteError::Wire(w)) => {
            let keys = w.offending_keys();
            assert!(keys.iter().any(|k| k.contains("configs[1]") && k.contains("action")), "{keys:?}");
        }
        other => panic!("expected a schema violation, got {other:?}"),
    }
}

#[tokio::test]
async fn non_json_answers_are_rejected() {
    let app = Router::new().route("/interpret", post(|| async { "sure, here you go" }));
    let url = format!("http://{}/interpret", spawn(app).await);
    let client = RemoteInterpreter::new(&InterpreterBackend::remote(&url, 5.0)).unwrap();
    assert!(matches!(client.interpret(MIXED, 0).await, Err(RemoteError::Wire(_))));
}

#[tokio::test]
async fn unreachable_endpoint_fails_within_the_timeout() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    let client = RemoteInterpreter::new(&InterpreterBackend::remote(&format!("http://{addr}/interpret"), 2.0)).unwrap();
    let start = Instant::now();
    let err = client.interpret(MIXED, 0).await.unwrap_err();
    assert!(matches!(err, RemoteError::Transport(_) | RemoteError::Timeout(_)), "{err}");
    assert!(start.elapsed() < Duration::from_secs(3));
}

#[tokio::test]
async fn slow_backend_times_out() {
    let app = Router::new().route(
        "/interpret",
        post(|| async {
            tokio::time::sleep(Duration::from_secs(5)).await;
            "{}"
        }),
    );
    let url = format!("http://{}/interpret", spawn(app).await);
    let client = RemoteInterpreter::new(&InterpreterBackend::remote(&url, 0.3)).unwrap();
    let start = Instant::now();
    assert!(matches!(client.interpret(MIXED, 0).await, Err(RemoteError::Timeout(_))));
    assert!(start.elapsed() < Duration::from_secs(2));
}

#[test]
fn remote_backend_requires_an_endpoint() {
    let b = InterpreterBackend { endpoint: None, ..InterpreterBackend::remote("x", 1.0) };
    assert_eq!(b.validate(), Err(BackendError::MissingEndpoint));
    assert!(RemoteInterpreter::new(&b).is_err());
}

#[tokio::test]
async fn service_switches_backend_per_command() {
    let backend = replay_backend().await;
    let api = format!("http://{}", spawn_service(shared(NoRender)).await);
    let http = reqwest::Client::new();
    let post = |path: String, body: Value| {
        http.post(format!("{api}{path}")).header("content-type", "application/json").body(body.to_string()).send()
    };
    let created: Value = serde_json::from_str(&post("/sessions".into(), json!({})).await.unwrap().text().await.unwrap()).unwrap();
    let id = created["id"].as_str().unwrap();

    let body = json!({ "text": MIXED, "backend": { "kind": "remote_model", "endpoint": backend, "timeout": 5.0 } });
    let resp = post(format!("/sessions/{id}/commands"), body).await.unwrap();
    assert_eq!(resp.status().as_u16(), 200);
    let v: Value = serde_json::from_str(&resp.text().await.unwrap()).unwrap();
    assert_eq!(v["configs"].as_array().unwrap().len(), 4);

    let body = json!({ "text": "Delete the red car.", "backend": { "kind": "remote_model" } });
    let resp = post(format!("/sessions/{id}/commands"), body).await.unwrap();
    assert_eq!(resp.status().as_u16(), 422);
}

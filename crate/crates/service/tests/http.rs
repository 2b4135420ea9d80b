use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use coldbench_core::TestbedConfig;
use coldbench_service::{router, Hub, HubConfig, ManualClock};
use serde_json::{json, Value};
use tower::ServiceExt;

fn app_with(config: HubConfig, console: Option<std::path::PathBuf>) -> Router {
    let hub = Hub::new(config, Arc::new(ManualClock::new(1_000))).unwrap();
    router(Arc::new(hub), console)
}

fn app() -> Router {
    app_with(HubConfig::default(), None)
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, String, String) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let ctype = resp
        .headers()
        .get("content-type")
        .map(|v| v.to_str().unwrap().to_string())
        .unwrap_or_default();
    let bytes = to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    (status, ctype, String::from_utf8(bytes.to_vec()).unwrap())
}

async fn json_call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let (status, _, text) = call(app, method, uri, body).await;
    (status, serde_json::from_str(&text).unwrap_or(Value::Null))
}

async fn register(app: &Router) -> String {
    let (status, v) = json_call(app, Method::POST, "/fridges", None).await;
    assert_eq!(status, StatusCode::CREATED);
    v["fridge_id"].as_str().unwrap().to_string()
}

#[tokio::test]
async fn publish_then_read_state_history_and_poll() {
    let app = app();
    let id = register(&app).await;
    let (status, env) = json_call(
        &app,
        Method::POST,
        &format!("/fridges/{id}/events"),
        Some(json!({"kind": "add", "position": 2, "item": {"name": "coke"}, "timestamp": 10})),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(env["fridge_id"], json!(id));
    assert_eq!(env["seq"], json!(1));
    assert_eq!(env["kind"], json!("add"));
    assert_eq!(env["position"], json!(2));
    assert_eq!(env["emitted_at"], json!(1_000));
    for field in ["item_id", "name", "state", "added_at", "removed_at", "activity_id"] {
        assert!(env["item"].get(field).is_some(), "item.{field} missing");
    }
    json_call(
        &app,
        Method::POST,
        &format!("/fridges/{id}/events"),
        Some(json!({"kind": "add", "position": 0, "item": {"name": "milk"}, "timestamp": 20})),
    )
    .await;

    let (_, state) = json_call(&app, Method::GET, &format!("/fridges/{id}/state"), None).await;
    assert_eq!(state["positions"][0]["name"], json!("milk"));
    assert_eq!(state["positions"][1], Value::Null);
    assert_eq!(state["positions"][2]["name"], json!("coke"));
    assert_eq!(state["head_seq"], json!(2));

    let (_, history) = json_call(&app, Method::GET, &format!("/fridges/{id}/history?item=coke"), None).await;
    assert_eq!(history.as_array().unwrap().len(), 1);
    let (_, history) = json_call(&app, Method::GET, &format!("/fridges/{id}/history?since=15"), None).await;
    assert_eq!(history.as_array().unwrap().len(), 1);
    assert_eq!(history[0]["item"]["name"], json!("milk"));

    let (_, polled) = json_call(&app, Method::GET, &format!("/fridges/{id}/poll?cursor=0&timeout_ms=10"), None).await;
    let seqs: Vec<u64> = polled.as_array().unwrap().iter().map(|e| e["seq"].as_u64().unwrap()).collect();
    assert_eq!(seqs, [1, 2]);
    let (status, polled) = json_call(&app, Method::GET, &format!("/fridges/{id}/poll?cursor=2&timeout_ms=50"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(polled, json!([]));

    let (_, leds) = json_call(&app, Method::GET, &format!("/fridges/{id}/leds"), None).await;
    assert_eq!(leds["leds"], json!(["off", "off", "off", "off"]));
}

#[tokio::test]
async fn errors_have_code_and_message() {
    let app = app();
    let (status, v) = json_call(&app, Method::GET, "/fridges/missing/state", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(v["error"], json!("not_found"));
    assert!(v["message"].as_str().unwrap().contains("missing"));

    let id = register(&app).await;
    let uri = format!("/fridges/{id}/events");
    let (status, v) = json_call(&app, Method::POST, &uri, Some(json!({"kind": "add", "position": 7}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"], json!("position_out_of_range"));

    let (status, v) = json_call(&app, Method::POST, &uri, Some(json!({"kind": "remove", "position": 1}))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(v["error"], json!("position_empty"));

    let (status, v) = json_call(&app, Method::POST, &uri, Some(json!({"kind": "teleport"}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"], json!("bad_request"));

    let (status, v) = json_call(&app, Method::GET, &format!("/fridges/{id}/poll?cursor=abc"), None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"], json!("bad_request"));

    let (status, v) = json_call(&app, Method::GET, "/nowhere", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(v["error"], json!("not_found"));
}

#[tokio::test]
async fn jsonp_wraps_json_responses() {
    let app = app();
    let id = register(&app).await;
    let (status, ctype, body) = call(&app, Method::GET, &format!("/fridges/{id}/state?callback=show"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert!(ctype.starts_with("application/javascript"));
    let inner = body.strip_prefix("/**/show(").and_then(|b| b.strip_suffix(");")).unwrap();
    let v: Value = serde_json::from_str(inner).unwrap();
    assert_eq!(v["fridge_id"], json!(id));

    let (status, _, _) = call(&app, Method::GET, &format!("/fridges/{id}/state?callback=alert(1)"), None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn tags_search_and_leds() {
    let app = app();
    let id = register(&app).await;
    let events = format!("/fridges/{id}/events");
    json_call(&app, Method::POST, &events, Some(json!({"kind": "add", "position": 1, "item": {"name": "coke"}}))).await;
    json_call(&app, Method::POST, &events, Some(json!({"kind": "add", "position": 3, "item": {"name": "milk"}}))).await;

    let (status, tags) = json_call(
        &app,
        Method::PUT,
        &format!("/fridges/{id}/items/milk/tags"),
        Some(json!({"tags": ["Pancakes", "breakfast", "pancakes"]})),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(tags["tags"], json!(["breakfast", "pancakes"]));

    let (_, found) = json_call(&app, Method::GET, &format!("/fridges/{id}/search?q=pancake"), None).await;
    assert_eq!(found["items"][0]["position"], json!(3));
    let (_, leds) = json_call(&app, Method::GET, &format!("/fridges/{id}/leds"), None).await;
    assert_eq!(leds["leds"], json!(["off", "off", "off", "green"]));

    let (_, none) = json_call(&app, Method::GET, &format!("/fridges/{id}/search?q=caviar"), None).await;
    assert_eq!(none["items"], json!([]));

    let (status, alerts) = json_call(&app, Method::GET, &format!("/fridges/{id}/alerts?now=99999999"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(alerts["items"], json!([]));
    let (status, recs) = json_call(&app, Method::GET, &format!("/fridges/{id}/recommendations"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(recs["items"], json!([]));
}

#[tokio::test]
async fn sim_commands_drive_a_simulated_fridge() {
    let mut testbed = TestbedConfig::default();
    testbed.sim.noise_amplitude = 0.0;
    testbed.recognizer.p_hit = 1.0;
    let app = app_with(
        HubConfig {
            sim: Some(testbed),
            ..HubConfig::default()
        },
        None,
    );
    let id = register(&app).await;
    let uri = format!("/fridges/{id}/sim/commands");
    let (status, v) = json_call(
        &app,
        Method::POST,
        &uri,
        Some(json!({"commands": ["wait 6000", "open", "place coke 2", "wait 8000", "close", "wait 6000"]})),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{v}");
    assert_eq!(v["applied"], json!(6));
    let kinds: Vec<&str> = v["events"].as_array().unwrap().iter().map(|e| e["kind"].as_str().unwrap()).collect();
    assert_eq!(kinds.first(), Some(&"door_open"));
    assert!(kinds.contains(&"add"));

    // the same events are on the poll stream
    let (_, polled) = json_call(&app, Method::GET, &format!("/fridges/{id}/poll?cursor=0&timeout_ms=10"), None).await;
    assert_eq!(polled.as_array().unwrap().len(), v["events"].as_array().unwrap().len());
    let (_, state) = json_call(&app, Method::GET, &format!("/fridges/{id}/state"), None).await;
    assert_eq!(state["positions"][2]["name"], json!("coke"));

    let (status, v) = json_call(&app, Method::POST, &uri, Some(json!({"script": "remove 3"}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"], json!("sim_command"));
    let (status, v) = json_call(&app, Method::POST, &uri, Some(json!({"commands": ["juggle"]}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"], json!("sim_command"));
}

#[tokio::test]
async fn sim_commands_are_off_by_default() {
    let app = app();
    let id = register(&app).await;
    let (status, v) = json_call(
        &app,
        Method::POST,
        &format!("/fridges/{id}/sim/commands"),
        Some(json!({"commands": ["open"]})),
    )
    .await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(v["error"], json!("sim_disabled"));
}

#[tokio::test]
async fn console_assets_are_served() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.html"), "<h1>console</h1>").unwrap();
    std::fs::write(dir.path().join("app.js"), "console.log(1)").unwrap();
    let app = app_with(HubConfig::default(), Some(dir.path().to_path_buf()));
    let (status, ctype, body) = call(&app, Method::GET, "/console/", None).await;
    assert_eq!(status, StatusCode::OK);
    assert!(ctype.starts_with("text/html"));
    assert_eq!(body, "<h1>console</h1>");
    let (status, _, body) = call(&app, Method::GET, "/console/app.js", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, "console.log(1)");
    let (status, _, _) = call(&app, Method::GET, "/console/missing.js", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

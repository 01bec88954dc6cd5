//! End-to-end checks of the HTTP API through the router.

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tap_core::instance::{Edit, Instance};
use tap_core::model::build;
use tap_core::solver::{solve, SolveConfig};
use tap_service::{replay, router, SessionStore};
use tower::ServiceExt;

const THREE_BY_TWO: &str = include_str!("../../core/tests/fixtures/three_by_two.json");

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let body = body.map(|b| b.to_string()).unwrap_or_default();
    let request = Request::builder().method(method).uri(uri).header("content-type", "application/json").body(Body::from(body)).unwrap();
    let response = app.clone().oneshot(request).await.unwrap();
    let status = response.status();
    let bytes = response.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, value)
}

async fn create(app: &Router, instance: &str) -> String {
    let request = Request::builder().method("POST").uri("/sessions").body(Body::from(instance.to_string())).unwrap();
    let response = app.clone().oneshot(request).await.unwrap();
    assert_eq!(response.status(), StatusCode::CREATED);
    let bytes = response.into_body().collect().await.unwrap().to_bytes();
    let value: Value = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(value["revision"], 0);
    value["id"].as_str().unwrap().to_string()
}

fn app() -> (Arc<SessionStore>, Router) {
    let store = Arc::new(SessionStore::in_memory());
    (store.clone(), router(store))
}

fn cfg() -> Value {
    json!({"seed": 3, "thread_budget": 1, "time_limit": 20.0})
}

fn cell(view: &Value, ta: &str, course: &str, task: &str) -> i64 {
    view["cells"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["ta"] == ta && c["course"] == course && c["task"] == task)
        .map_or(0, |c| c["hours"].as_i64().unwrap())
}

fn teaches(view: &Value, ta: &str, course: &str) -> bool {
    view["cells"].as_array().unwrap().iter().any(|c| c["ta"] == ta && c["course"] == course)
}

#[tokio::test]
async fn malformed_instances_are_rejected() {
    let (_, app) = app();
    let request = Request::builder().method("POST").uri("/sessions").body(Body::from("{\"label\": 1}")).unwrap();
    let response = app.clone().oneshot(request).await.unwrap();
    assert_eq!(response.status(), StatusCode::BAD_REQUEST);
    let (status, body) = call(&app, "GET", "/sessions/missing", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["error"], "not_found");
}

#[tokio::test]
async fn two_creates_give_distinct_sessions() {
    let (_, app) = app();
    let a = create(&app, THREE_BY_TWO).await;
    let b = create(&app, THREE_BY_TWO).await;
    assert_ne!(a, b);
    let (_, list) = call(&app, "GET", "/sessions", None).await;
    assert_eq!(list["sessions"].as_array().unwrap().len(), 2);
    call(&app, "POST", &format!("/sessions/{a}/edits"), Some(json!({"kind": "forbid", "ta": "ana", "course": "alg"}))).await;
    let (_, view) = call(&app, "GET", &format!("/sessions/{b}"), None).await;
    assert_eq!(view["revision"], 0);
}

#[tokio::test]
async fn service_solve_matches_a_direct_solve() {
    let (_, app) = app();
    let id = create(&app, THREE_BY_TWO).await;
    let (status, view) = call(&app, "POST", &format!("/sessions/{id}/solve?wait=true"), Some(cfg())).await;
    assert_eq!(status, StatusCode::OK);
    let config: SolveConfig = serde_json::from_value(cfg()).unwrap();
    let direct = solve(&build(&Instance::from_json(THREE_BY_TWO).unwrap()), &config);
    assert_eq!(view["status"], direct.status.to_string());
    assert_eq!(view["objective"], json!(direct.objective));
    assert_eq!(view["solved_revision"], 0);
    assert_eq!(view["stale"], false);
}

#[tokio::test]
async fn bad_edits_do_not_advance_the_revision() {
    let (_, app) = app();
    let id = create(&app, THREE_BY_TWO).await;
    let uri = format!("/sessions/{id}/edits");
    let (status, body) =
        call(&app, "POST", &uri, Some(json!({"kind": "pin_hours", "ta": "ana", "course": "alg", "task": "admin", "hours": 99}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"], "bad_edit");
    let (status, _) = call(&app, "POST", &uri, Some(json!({"kind": "teleport"}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (_, view) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(view["revision"], 0);
}

#[tokio::test]
async fn forbid_and_pin_course_are_honoured() {
    let (_, app) = app();
    let id = create(&app, THREE_BY_TWO).await;
    let edits = format!("/sessions/{id}/edits");
    let (_, r) = call(&app, "POST", &edits, Some(json!({"kind": "forbid", "ta": "eva", "course": "alg"}))).await;
    assert_eq!(r["revision"], 1);
    let (_, r) = call(&app, "POST", &edits, Some(json!({"kind": "pin_course", "ta": "ben", "course": "alg", "note": "asked"}))).await;
    assert_eq!(r["revision"], 2);
    let (_, view) = call(&app, "POST", &format!("/sessions/{id}/solve?wait=true"), Some(cfg())).await;
    assert_eq!(view["status"], "optimal", "{view}");
    assert!(!teaches(&view, "eva", "alg"));
    assert!(teaches(&view, "ben", "alg"));
}

#[tokio::test]
async fn replay_reproduces_the_stored_outcome_and_pins_stay_verbatim() {
    let (store, app) = app();
    let id = create(&app, THREE_BY_TWO).await;
    let edits = format!("/sessions/{id}/edits");
    let solve_uri = format!("/sessions/{id}/solve?wait=true");
    call(&app, "POST", &edits, Some(json!({"kind": "pin_hours", "ta": "eva", "course": "db", "task": "lab_session", "hours": 4}))).await;
    let (_, first) = call(&app, "POST", &solve_uri, Some(cfg())).await;
    assert_eq!(cell(&first, "eva", "db", "lab_session"), 4);
    call(&app, "POST", &edits, Some(json!({"kind": "set_weight", "family": "w_soft_courses", "value": 7}))).await;
    call(&app, "POST", &edits, Some(json!({"kind": "pin_hours", "ta": "ana", "course": "alg", "task": "admin", "hours": 4}))).await;
    let (_, second) = call(&app, "POST", &solve_uri, Some(cfg())).await;
    assert_eq!(second["solved_revision"], 3);
    assert_eq!(cell(&second, "eva", "db", "lab_session"), 4);
    assert_eq!(cell(&second, "ana", "alg", "admin"), 4);

    let handle = store.get(&id).unwrap();
    let session = handle.lock().unwrap();
    let last = session.last().unwrap();
    let log: Vec<Edit> = session.edits().to_vec();
    let again = replay(session.base(), &log, &last.config).unwrap();
    assert_eq!(again.canonical_json(), last.outcome.canonical_json());
}

#[tokio::test]
async fn contradictory_pins_are_infeasible_and_name_the_admin_rule() {
    let (_, app) = app();
    let id = create(&app, THREE_BY_TWO).await;
    let edits = format!("/sessions/{id}/edits");
    call(&app, "POST", &edits, Some(json!({"kind": "pin_hours", "ta": "ana", "course": "alg", "task": "admin", "hours": 2}))).await;
    call(&app, "POST", &edits, Some(json!({"kind": "pin_hours", "ta": "eva", "course": "alg", "task": "admin", "hours": 2}))).await;
    let (_, view) = call(&app, "POST", &format!("/sessions/{id}/solve?wait=true"), Some(cfg())).await;
    assert_eq!(view["status"], "infeasible");
    assert!(view["cells"].as_array().unwrap().is_empty());
    let conflicts = view["conflicts"].as_array().unwrap();
    assert!(conflicts.iter().any(|v| v["equation"] == "Eq13"), "{conflicts:?}");
    let (status, body) = call(&app, "GET", &format!("/sessions/{id}/report"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["error"], "no_schedule");
}

#[tokio::test]
async fn reports_need_a_fresh_outcome() {
    let (_, app) = app();
    let id = create(&app, THREE_BY_TWO).await;
    let report = format!("/sessions/{id}/report");
    let (status, body) = call(&app, "GET", &report, None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["error"], "no_outcome");
    call(&app, "POST", &format!("/sessions/{id}/solve?wait=true"), Some(cfg())).await;
    let (status, body) = call(&app, "GET", &report, None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["reports"].as_array().unwrap().len(), 1);
    assert_eq!(body["verdicts"][0]["strict_ok"], true);
    call(&app, "POST", &format!("/sessions/{id}/edits"), Some(json!({"kind": "forbid", "ta": "ben", "course": "db"}))).await;
    let (status, body) = call(&app, "GET", &report, None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["error"], "stale");
}

#[tokio::test]
async fn manual_schedules_add_a_comparison_row() {
    let (_, app) = app();
    let id = create(&app, THREE_BY_TWO).await;
    call(&app, "POST", &format!("/sessions/{id}/solve?wait=true"), Some(cfg())).await;
    let manual = "# a hand-made plan\nx_s0_c0_t0 4\nx_s0_c0_t1 8\nx_s2_c1_t0 3\nx_s2_c1_t3 6\n";
    let (status, body) = call(&app, "POST", &format!("/sessions/{id}/report"), Some(json!({"manual": manual}))).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let rows = body["comparison"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1]["source"], "manual");
    assert!(body["table"].as_str().unwrap().contains("manual"));
    assert_eq!(body["verdicts"][1]["strict_ok"], false);
    let (status, _) = call(&app, "POST", &format!("/sessions/{id}/report"), Some(json!({"manual": "x_s9_c0_t0 1\n"}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn a_second_solve_while_running_is_busy_and_cancel_stops_it() {
    let (_, app) = app();
    let instance = tap_core::generate::generate(&tap_core::generate::GenSpec::new(50, 45, 10, 0.9, 1)).unwrap();
    let id = create(&app, &instance.to_json()).await;
    let slow = json!({"seed": 1, "thread_budget": 1, "time_limit": 60.0, "log_interval": 0.05});
    let (status, started) = call(&app, "POST", &format!("/sessions/{id}/solve"), Some(slow.clone())).await;
    assert_eq!(status, StatusCode::ACCEPTED);
    assert_eq!(started["revision"], 0);
    let (status, body) = call(&app, "POST", &format!("/sessions/{id}/solve"), Some(slow)).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["error"], "busy");
    let (_, cancelled) = call(&app, "POST", &format!("/sessions/{id}/cancel"), None).await;
    assert_eq!(cancelled["cancelled"], true);
    let deadline = std::time::Instant::now() + std::time::Duration::from_secs(30);
    loop {
        let (_, view) = call(&app, "GET", &format!("/sessions/{id}/outcome"), None).await;
        if view["running"] == false {
            assert_eq!(view["solved_revision"], 0);
            break;
        }
        assert!(std::time::Instant::now() < deadline, "cancel did not stop the solve");
        tokio::time::sleep(std::time::Duration::from_millis(50)).await;
    }
}

#[tokio::test]
async fn bad_configs_are_rejected() {
    let (_, app) = app();
    let id = create(&app, THREE_BY_TWO).await;
    let (status, body) = call(&app, "POST", &format!("/sessions/{id}/solve"), Some(json!({"thread_budget": 0}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"], "bad_config");
}

#[tokio::test]
async fn events_stream_ends_with_done() {
    let (_, app) = app();
    let id = create(&app, THREE_BY_TWO).await;
    let request = Request::builder().uri(format!("/sessions/{id}/events")).body(Body::empty()).unwrap();
    let response = app.clone().oneshot(request).await.unwrap();
    assert_eq!(response.status(), StatusCode::OK);
    assert_eq!(response.headers()["content-type"], "text/event-stream");
    let mut body = response.into_body();
    call(&app, "POST", &format!("/sessions/{id}/solve?wait=true"), Some(cfg())).await;
    let mut text = String::new();
    while !text.contains("event: done") {
        let frame = tokio::time::timeout(std::time::Duration::from_secs(10), body.frame()).await.unwrap().unwrap().unwrap();
        if let Ok(data) = frame.into_data() {
            text.push_str(std::str::from_utf8(&data).unwrap());
        }
    }
    assert!(text.contains("\"revision\":0"), "{text}");
}

use std::collections::HashMap;
use std::convert::Infallible;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::sse::{self, KeepAlive, Sse};
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::Stream;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tap_core::encode::read_solution;
use tap_core::instance::{capacity_report, Edit};
use tap_core::metrics::{build_report, compare, Comparison, Report, ScatterPoint, Source};
use tap_core::solver::{Progress, SolveConfig, SolveStats};
use tap_core::verify::{check, pin_conflicts, CheckMode, HardViolation, Verdict};
use tokio_stream::wrappers::BroadcastStream;
use tokio_stream::StreamExt;

use crate::error::ServiceError;
use crate::session::{Session, SessionStore, Snapshot};

type Store = Arc<SessionStore>;

/// Name under which the built-in solver appears in reports.
const SOLVER: &str = "tap";

pub fn router(store: Arc<SessionStore>) -> Router {
    Router::new()
        .route("/sessions", post(create).get(list))
        .route("/sessions/{id}", get(session))
        .route("/sessions/{id}/edits", post(edit))
        .route("/sessions/{id}/solve", post(solve))
        .route("/sessions/{id}/outcome", get(outcome))
        .route("/sessions/{id}/report", get(report).post(report_against))
        .route("/sessions/{id}/cancel", post(cancel))
        .route("/sessions/{id}/events", get(events))
        .with_state(store)
}

/// Serves the API on `addr` until the process ends.
pub async fn serve(store: Arc<SessionStore>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(store)).await
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    #[serde(flatten)]
    pub snapshot: Snapshot,
    pub stale: bool,
    pub running: bool,
}

/// One nonzero hour cell of a schedule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub ta: String,
    pub course: String,
    pub task: String,
    pub hours: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeView {
    /// Current revision of the session.
    pub revision: u64,
    /// Revision the outcome belongs to.
    pub solved_revision: Option<u64>,
    pub stale: bool,
    pub running: bool,
    /// Revision the running solve belongs to.
    pub running_revision: Option<u64>,
    pub progress: Option<Progress>,
    pub status: Option<String>,
    pub objective: Option<i64>,
    pub lower_bound: Option<i64>,
    pub config: Option<SolveConfig>,
    pub stats: Option<SolveStats>,
    pub cells: Vec<Cell>,
    pub totals: Vec<ScatterPoint>,
    /// For infeasible outcomes: hard rules the pins break by themselves.
    pub conflicts: Vec<HardViolation>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportBundle {
    pub reports: Vec<Report>,
    pub verdicts: Vec<Verdict>,
    pub comparison: Comparison,
    pub table: String,
    pub csv: String,
}

fn outcome_view(s: &Session) -> OutcomeView {
    let mut view = OutcomeView {
        revision: s.revision(),
        solved_revision: None,
        stale: s.is_stale(),
        running: s.is_running(),
        running_revision: s.running_revision(),
        progress: s.progress(),
        status: None,
        objective: None,
        lower_bound: None,
        config: None,
        stats: None,
        cells: Vec::new(),
        totals: Vec::new(),
        conflicts: Vec::new(),
    };
    let Some(last) = s.last() else { return view };
    let instance = s.instance_at(last.revision);
    let out = &last.outcome;
    view.solved_revision = Some(last.revision);
    view.status = Some(out.status.to_string());
    view.objective = out.objective;
    view.lower_bound = Some(out.lower_bound);
    view.config = Some(last.config.clone());
    view.stats = Some(out.stats.clone());
    match &out.best {
        Some(best) => {
            for (si, ta) in instance.tas().iter().enumerate() {
                for (ci, course) in instance.courses().iter().enumerate() {
                    for (k, kind) in instance.kinds().iter().enumerate() {
                        let hours = best.hours(si, ci, k);
                        if hours != 0 {
                            view.cells.push(Cell { ta: ta.id.clone(), course: course.id.clone(), task: kind.to_string(), hours });
                        }
                    }
                }
                view.totals.push(ScatterPoint { ta: ta.id.clone(), target: instance.target(si), assigned: best.total_hours(si) });
            }
        }
        None => view.conflicts = pin_conflicts(&instance),
    }
    view
}

async fn create(State(store): State<Store>, body: String) -> Result<impl IntoResponse, ServiceError> {
    let id = store.create(&body)?;
    let handle = store.get(&id)?;
    let capacity = capacity_report(handle.lock().unwrap().instance());
    Ok((StatusCode::CREATED, Json(json!({"id": id, "revision": 0, "capacity": capacity}))))
}

async fn list(State(store): State<Store>) -> Json<serde_json::Value> {
    Json(json!({"sessions": store.ids()}))
}

async fn session(State(store): State<Store>, Path(id): Path<String>) -> Result<Json<SessionView>, ServiceError> {
    let handle = store.get(&id)?;
    let s = handle.lock().unwrap();
    Ok(Json(SessionView { snapshot: s.snapshot(), stale: s.is_stale(), running: s.is_running() }))
}

async fn edit(State(store): State<Store>, Path(id): Path<String>, body: String) -> Result<Json<serde_json::Value>, ServiceError> {
    let edit: Edit = serde_json::from_str(&body).map_err(|e| ServiceError::BadEdit(e.to_string()))?;
    let revision = store.apply_edit(&id, edit)?;
    Ok(Json(json!({"revision": revision})))
}

async fn solve(
    State(store): State<Store>,
    Path(id): Path<String>,
    Query(query): Query<HashMap<String, String>>,
    body: String,
) -> Result<axum::response::Response, ServiceError> {
    let config: SolveConfig = if body.trim().is_empty() {
        SolveConfig::default()
    } else {
        serde_json::from_str(&body).map_err(|e| ServiceError::BadConfig(e.to_string()))?
    };
    let wait = query.get("wait").is_some_and(|v| v == "true" || v == "1");
    let job = store.start(&id, config)?;
    let revision = job.revision;
    let worker = store.clone();
    let task = tokio::task::spawn_blocking(move || worker.run(job));
    if !wait {
        return Ok((StatusCode::ACCEPTED, Json(json!({"revision": revision, "running": true}))).into_response());
    }
    task.await.map_err(|e| ServiceError::Internal(e.to_string()))??;
    let handle = store.get(&id)?;
    let view = outcome_view(&handle.lock().unwrap());
    Ok(Json(view).into_response())
}

async fn outcome(State(store): State<Store>, Path(id): Path<String>) -> Result<Json<OutcomeView>, ServiceError> {
    let handle = store.get(&id)?;
    let view = outcome_view(&handle.lock().unwrap());
    Ok(Json(view))
}

#[derive(Debug, Deserialize)]
struct AgainstManual {
    /// Manual schedule in the solution-file format.
    manual: String,
}

fn bundle(s: &Session, manual: Option<&str>) -> Result<ReportBundle, ServiceError> {
    let last = s.last().ok_or(ServiceError::NoOutcome)?;
    if s.is_stale() {
        return Err(ServiceError::Stale);
    }
    let best = last.outcome.best.as_ref().ok_or(ServiceError::NoSchedule)?;
    let instance = s.instance();
    let internal = |e: tap_core::verify::VerifyError| ServiceError::Internal(e.to_string());
    let mut reports = vec![build_report(instance, best, Source::from_outcome(SOLVER, &last.outcome)).map_err(internal)?];
    let mut verdicts = vec![check(instance, best, CheckMode::Audit).map_err(internal)?];
    if let Some(text) = manual {
        let schedule = read_solution(instance, text).map_err(|e| ServiceError::BadRequest(format!("manual schedule: {e}")))?;
        reports.push(build_report(instance, &schedule, Source::Manual).map_err(internal)?);
        verdicts.push(check(instance, &schedule, CheckMode::Audit).map_err(internal)?);
    }
    let comparison = compare(&reports).map_err(|e| ServiceError::Internal(e.to_string()))?;
    Ok(ReportBundle { table: comparison.to_text(), csv: comparison.to_csv(), reports, verdicts, comparison })
}

async fn report(State(store): State<Store>, Path(id): Path<String>) -> Result<Json<ReportBundle>, ServiceError> {
    let handle = store.get(&id)?;
    let bundle = bundle(&handle.lock().unwrap(), None)?;
    Ok(Json(bundle))
}

async fn report_against(State(store): State<Store>, Path(id): Path<String>, body: String) -> Result<Json<ReportBundle>, ServiceError> {
    let request: AgainstManual = serde_json::from_str(&body).map_err(|e| ServiceError::BadRequest(e.to_string()))?;
    let handle = store.get(&id)?;
    let bundle = bundle(&handle.lock().unwrap(), Some(&request.manual))?;
    Ok(Json(bundle))
}

async fn cancel(State(store): State<Store>, Path(id): Path<String>) -> Result<Json<serde_json::Value>, ServiceError> {
    Ok(Json(json!({"cancelled": store.cancel(&id)?})))
}

async fn events(
    State(store): State<Store>,
    Path(id): Path<String>,
) -> Result<Sse<impl Stream<Item = Result<sse::Event, Infallible>>>, ServiceError> {
    let handle = store.get(&id)?;
    let rx = handle.lock().unwrap().events.subscribe();
    let stream = BroadcastStream::new(rx).filter_map(|message| {
        let event = message.ok()?;
        let name = match &event {
            crate::session::Event::Progress { .. } => "progress",
            crate::session::Event::Done { .. } => "done",
        };
        Some(Ok(sse::Event::default().event(name).json_data(&event).expect("event serializes")))
    });
    Ok(Sse::new(stream).keep_alive(KeepAlive::default()))
}

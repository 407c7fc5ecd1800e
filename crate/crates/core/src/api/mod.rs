//! HTTP service over the datastore. Handlers only translate between JSON and
//! store commands; all rules live in the session engine.
//!
//! Every write goes through one mutex around the [`Datastore`], which gives
//! per-session ordering and a single log appender. Reports copy the score
//! rows under the lock and build the tables after releasing it.

mod error;

use std::collections::BTreeMap;
use std::future::Future;
use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::PathBuf;
use std::sync::{Arc, Mutex, MutexGuard};

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

pub use error::ApiError;

use crate::clock::{Clock, SimulatedClock, SystemClock, Timestamp};
use crate::place::{CountResponse, PlaceCount, PlaceValue};
use crate::session::{
    ActiveItem, Cohort, CountState, ItemSource, Phase, StudySession, TestKind, PRACTICE_PER_PLACE, TEST_LENGTH,
};
use crate::stats::{build_report, ReportOptions, TableFormat, Tails, TotalSdMethod};
use crate::store::{parse_traditional_csv, Applied, Command, Datastore, StoreError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClockMode {
    #[default]
    Real,
    Simulated,
}

impl std::str::FromStr for ClockMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "real" => Ok(ClockMode::Real),
            "simulated" => Ok(ClockMode::Simulated),
            other => Err(format!("clock must be real or simulated, got {other:?}")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub host: IpAddr,
    pub port: u16,
    pub data_dir: PathBuf,
    pub seed: u64,
    pub clock: ClockMode,
}

impl Default for ServeConfig {
    fn default() -> Self {
        Self {
            host: IpAddr::V4(Ipv4Addr::LOCALHOST),
            port: 8080,
            data_dir: PathBuf::from("data"),
            seed: 0,
            clock: ClockMode::Real,
        }
    }
}

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("cannot open data directory: {0}")]
    Store(#[from] StoreError),
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: SocketAddr, source: std::io::Error },
    #[error("server error: {0}")]
    Io(#[from] std::io::Error),
}

/// Shared state behind the router.
pub struct Service {
    store: Mutex<Datastore>,
    sim_clock: Option<Arc<SimulatedClock>>,
}

impl Service {
    pub fn open(config: &ServeConfig) -> Result<Self, StoreError> {
        let (clock, sim_clock): (Arc<dyn Clock>, _) = match config.clock {
            ClockMode::Real => (Arc::new(SystemClock), None),
            ClockMode::Simulated => {
                let c = Arc::new(SimulatedClock::default());
                (c.clone(), Some(c))
            }
        };
        let store = Datastore::open(&config.data_dir, config.seed, clock)?;
        if let (Some(sim), Some(last)) = (&sim_clock, store.store().last_timestamp()) {
            // Never restart a simulated clock behind the log.
            if sim.now() < last {
                sim.set(last);
            }
        }
        Ok(Self { store: Mutex::new(store), sim_clock })
    }

    pub fn from_datastore(store: Datastore, sim_clock: Option<Arc<SimulatedClock>>) -> Self {
        Self { store: Mutex::new(store), sim_clock }
    }

    fn lock(&self) -> Result<MutexGuard<'_, Datastore>, ApiError> {
        self.store
            .lock()
            .map_err(|_| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", "store lock poisoned"))
    }

    /// Hand back the datastore, e.g. after shutdown.
    pub fn into_datastore(self) -> Datastore {
        self.store.into_inner().unwrap_or_else(|e| e.into_inner())
    }
}

type Shared = State<Arc<Service>>;

pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/students", post(create_student))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/next", get(next_item))
        .route("/sessions/{id}/select", post(select_place))
        .route("/sessions/{id}/clicks", post(click))
        .route("/sessions/{id}/answer", post(answer))
        .route("/sessions/{id}/satisfaction", post(satisfaction))
        .route("/sessions/{id}/advance", post(advance))
        .route("/import/traditional", post(import_traditional))
        .route("/ratings/expert", post(expert_rating))
        .route("/reports", get(report_summary))
        .route("/reports/table/{n}", get(report_table))
        .route("/admin/clock", post(admin_clock))
        .fallback(|| async { ApiError::not_found("no_route", "no such route") })
        .with_state(service)
}

/// Bind, report the bound address, and serve until `shutdown` resolves. The
/// log is flushed before returning.
pub async fn serve<F>(config: ServeConfig, shutdown: F, on_bound: impl FnOnce(SocketAddr)) -> Result<(), ServeError>
where
    F: Future<Output = ()> + Send + 'static,
{
    let service = Arc::new(Service::open(&config)?);
    let addr = SocketAddr::new(config.host, config.port);
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(|source| ServeError::Bind { addr, source })?;
    on_bound(listener.local_addr()?);
    axum::serve(listener, router(service.clone())).with_graceful_shutdown(shutdown).await?;
    let mut store = service.lock().map_err(|e| std::io::Error::other(e.message))?;
    store.flush()?;
    Ok(())
}

// ---- views ----

/// What the client needs to render an item. The digits themselves are not
/// sent; the number and its nonzero places are enough to draw the blocks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ItemView {
    pub source: ItemSource,
    /// 1-based position within the paper or practice block.
    pub position: usize,
    pub of: usize,
    pub question_id: String,
    pub number: u32,
    pub target_place: PlaceValue,
    pub places: Vec<PlaceValue>,
}

impl ItemView {
    fn new(item: &ActiveItem<'_>) -> Self {
        let (index, of) = match item.source {
            ItemSource::Test { index, .. } => (index, TEST_LENGTH),
            ItemSource::Practice { index, .. } | ItemSource::Review { index, .. } => (index, PRACTICE_PER_PLACE),
        };
        Self {
            source: item.source,
            position: index + 1,
            of,
            question_id: item.question.id.clone(),
            number: item.question.number,
            target_place: item.question.target_place,
            places: item.question.decomposition.places().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionView {
    pub session_id: String,
    pub student_id: String,
    pub cohort: Cohort,
    pub phase: Phase,
    pub active_item: Option<ItemView>,
    pub answered: BTreeMap<TestKind, usize>,
    pub practice_completed: BTreeMap<PlaceValue, usize>,
    pub running_counts: BTreeMap<PlaceValue, u32>,
    pub satisfaction_submitted: bool,
    pub retention_due_at: Option<Timestamp>,
    pub can_advance: bool,
}

impl SessionView {
    pub fn new(s: &StudySession, now: Timestamp) -> Self {
        Self {
            session_id: s.session_id.clone(),
            student_id: s.student_id.clone(),
            cohort: s.cohort,
            phase: s.phase,
            active_item: s.active_item().as_ref().map(ItemView::new),
            answered: TestKind::ALL.iter().map(|&k| (k, s.answered(k))).collect(),
            practice_completed: crate::place::all_places()
                .iter()
                .map(|&p| (p, s.practice.completed[p.power() as usize]))
                .collect(),
            running_counts: s.running_counts.clone(),
            satisfaction_submitted: s.satisfaction.is_some(),
            retention_due_at: s.retention_due_at(),
            can_advance: s.can_advance(now),
        }
    }
}

fn session_view(store: &Datastore, id: &str) -> Result<SessionView, ApiError> {
    let session = store.store().session(id).ok_or_else(|| ApiError::from(StoreError::UnknownSession(id.into())))?;
    Ok(SessionView::new(session, store.clock().now()))
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    payload.map(|Json(v)| v).map_err(ApiError::from)
}

// ---- handlers ----

async fn healthz(State(svc): Shared) -> Result<Json<serde_json::Value>, ApiError> {
    let store = svc.lock()?;
    Ok(Json(json!({
        "status": "ok",
        "last_seq": store.store().last_seq(),
        "now": store.clock().now(),
        "clock": if svc.sim_clock.is_some() { "simulated" } else { "real" },
    })))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NewStudent {
    student_id: String,
}

async fn create_student(State(svc): Shared, payload: Result<Json<NewStudent>, JsonRejection>) -> Result<Response, ApiError> {
    let NewStudent { student_id } = body(payload)?;
    let applied = svc.lock()?.execute(None, Command::RegisterStudent { student_id })?;
    Ok((StatusCode::CREATED, Json(applied)).into_response())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NewSession {
    student_id: String,
    #[serde(default = "default_cohort")]
    cohort: Cohort,
    seed: Option<u64>,
}

fn default_cohort() -> Cohort {
    Cohort::App
}

async fn create_session(State(svc): Shared, payload: Result<Json<NewSession>, JsonRejection>) -> Result<Response, ApiError> {
    let NewSession { student_id, cohort, seed } = body(payload)?;
    let mut store = svc.lock()?;
    let Applied::SessionCreated { session_id, .. } =
        store.execute(None, Command::CreateSession { student_id, cohort, seed })?
    else {
        unreachable!("create session yields SessionCreated")
    };
    Ok((StatusCode::CREATED, Json(session_view(&store, &session_id)?)).into_response())
}

async fn get_session(State(svc): Shared, Path(id): Path<String>) -> Result<Json<SessionView>, ApiError> {
    Ok(Json(session_view(&*svc.lock()?, &id)?))
}

async fn next_item(State(svc): Shared, Path(id): Path<String>) -> Result<Json<serde_json::Value>, ApiError> {
    let view = session_view(&*svc.lock()?, &id)?;
    Ok(Json(json!({ "phase": view.phase, "item": view.active_item })))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlaceBody {
    place: PlaceValue,
}

async fn select_place(
    State(svc): Shared,
    Path(id): Path<String>,
    payload: Result<Json<PlaceBody>, JsonRejection>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let PlaceBody { place } = body(payload)?;
    let mut store = svc.lock()?;
    store.execute(Some(&id), Command::SelectPlace { place })?;
    let view = session_view(&store, &id)?;
    Ok(Json(json!({ "phase": view.phase, "item": view.active_item })))
}

async fn click(
    State(svc): Shared,
    Path(id): Path<String>,
    payload: Result<Json<PlaceBody>, JsonRejection>,
) -> Result<Json<CountState>, ApiError> {
    let PlaceBody { place } = body(payload)?;
    match svc.lock()?.execute(Some(&id), Command::Click { place })? {
        Applied::Clicked(state) => Ok(Json(state)),
        other => unreachable!("click yields Clicked, got {other:?}"),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AnswerBody {
    submission_id: Option<String>,
    counts: Vec<PlaceCount>,
}

#[derive(Debug, Serialize)]
struct AnswerView {
    item: ItemSource,
    outcome: crate::place::Outcome,
    cues: Vec<crate::place::Cue>,
    replayed: bool,
    phase: Phase,
    next_item: Option<ItemView>,
}

async fn answer(
    State(svc): Shared,
    Path(id): Path<String>,
    payload: Result<Json<AnswerBody>, JsonRejection>,
) -> Result<Json<AnswerView>, ApiError> {
    let AnswerBody { submission_id, counts } = body(payload)?;
    if submission_id.as_deref().is_some_and(|s| s.trim().is_empty()) {
        return Err(ApiError::validation("submission_id must not be empty"));
    }
    let mut store = svc.lock()?;
    let result = match store.execute(Some(&id), Command::SubmitAnswer { response: CountResponse { counts }, submission_id })? {
        Applied::Submitted(r) => r,
        other => unreachable!("answer yields Submitted, got {other:?}"),
    };
    let view = session_view(&store, &id)?;
    Ok(Json(AnswerView {
        item: result.item,
        outcome: result.verdict.outcome,
        cues: result.verdict.narration_events,
        replayed: result.replayed,
        phase: view.phase,
        next_item: view.active_item,
    }))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RatingsBody {
    ratings: Vec<u8>,
}

async fn satisfaction(
    State(svc): Shared,
    Path(id): Path<String>,
    payload: Result<Json<RatingsBody>, JsonRejection>,
) -> Result<Json<SessionView>, ApiError> {
    let RatingsBody { ratings } = body(payload)?;
    let mut store = svc.lock()?;
    store.execute(Some(&id), Command::SubmitSatisfaction { ratings })?;
    Ok(Json(session_view(&store, &id)?))
}

async fn advance(State(svc): Shared, Path(id): Path<String>) -> Result<Json<SessionView>, ApiError> {
    let mut store = svc.lock()?;
    store.execute(Some(&id), Command::AdvancePhase)?;
    Ok(Json(session_view(&store, &id)?))
}

async fn import_traditional(State(svc): Shared, text: String) -> Result<Json<serde_json::Value>, ApiError> {
    let parsed = parse_traditional_csv(&text).map_err(|errors| ApiError::from(StoreError::Import(errors)))?;
    if parsed.rows.is_empty() {
        return Ok(Json(json!({ "imported": 0, "warnings": parsed.warnings })));
    }
    let applied = svc.lock()?.execute(None, Command::ImportTraditional { rows: parsed.rows })?;
    let Applied::Imported { count } = applied else { unreachable!("import yields Imported") };
    Ok(Json(json!({ "imported": count, "warnings": parsed.warnings })))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExpertBody {
    expert_id: Option<String>,
    ratings: Vec<u8>,
}

async fn expert_rating(State(svc): Shared, payload: Result<Json<ExpertBody>, JsonRejection>) -> Result<Response, ApiError> {
    let ExpertBody { expert_id, ratings } = body(payload)?;
    let mut store = svc.lock()?;
    let expert_id = expert_id.unwrap_or_else(|| format!("expert-{}", store.store().expert_ratings().len() + 1));
    let applied = store.execute(None, Command::RecordExpertRating { expert_id, ratings })?;
    Ok((StatusCode::CREATED, Json(applied)).into_response())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReportQuery {
    format: Option<String>,
    tails: Option<String>,
    total_sd: Option<String>,
}

impl ReportQuery {
    fn options(&self) -> Result<ReportOptions, ApiError> {
        let tails: Tails = self.tails.as_deref().map(str::parse).transpose().map_err(ApiError::validation)?.unwrap_or_default();
        let total_sd: TotalSdMethod =
            self.total_sd.as_deref().map(str::parse).transpose().map_err(ApiError::validation)?.unwrap_or_default();
        Ok(ReportOptions { tails, total_sd })
    }

    fn format(&self) -> Result<TableFormat, ApiError> {
        Ok(self.format.as_deref().map(str::parse).transpose().map_err(ApiError::validation)?.unwrap_or(TableFormat::Text))
    }
}

fn report_data(svc: &Service) -> Result<crate::stats::StudyData, ApiError> {
    Ok(svc.lock()?.store().study_data())
}

async fn report_table(
    State(svc): Shared,
    Path(n): Path<String>,
    query: Result<Query<ReportQuery>, QueryRejection>,
) -> Result<Response, ApiError> {
    let Query(query) = query?;
    let n: u8 = n.parse().map_err(|_| ApiError::not_found("unknown_table", format!("unknown table {n:?}")))?;
    let (opts, format) = (query.options()?, query.format()?);
    let data = report_data(&svc)?;
    let report = build_report(&data, &opts)?;
    let text = report.table(n)?.render(format);
    let content_type = match format {
        TableFormat::Text => "text/plain; charset=utf-8",
        TableFormat::Csv => "text/csv; charset=utf-8",
    };
    Ok(([(header::CONTENT_TYPE, content_type)], text).into_response())
}

async fn report_summary(
    State(svc): Shared,
    query: Result<Query<ReportQuery>, QueryRejection>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let Query(query) = query?;
    let (opts, format) = (query.options()?, query.format()?);
    let report = build_report(&report_data(&svc)?, &opts)?;
    let tables: Vec<_> = report.tables.iter().map(|t| json!({ "id": t.id, "title": t.title, "body": t.render(format) })).collect();
    Ok(Json(json!({
        "tables": tables,
        "omissions": report.omission_notices(),
        "footnotes": report.footnotes,
    })))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClockBody {
    #[serde(default)]
    advance_days: i64,
    #[serde(default)]
    advance_seconds: i64,
}

async fn admin_clock(State(svc): Shared, payload: Result<Json<ClockBody>, JsonRejection>) -> Result<Json<serde_json::Value>, ApiError> {
    let ClockBody { advance_days, advance_seconds } = body(payload)?;
    let clock = svc
        .sim_clock
        .as_ref()
        .ok_or_else(|| ApiError::new(StatusCode::CONFLICT, "clock_not_simulated", "server runs on the real clock"))?;
    if advance_days < 0 || advance_seconds < 0 {
        return Err(ApiError::validation("the clock only moves forward"));
    }
    // Hold the store lock so no command sees a half-applied jump.
    let _guard = svc.lock()?;
    clock.advance_days(advance_days);
    let now = clock.advance_seconds(advance_seconds);
    Ok(Json(json!({ "now": now })))
}

//! `/v1` HTTP/JSON API. See `docs/api.md` for the schema.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;

use aev_core::automation::{bundled_presets, HardwarePreset};
use aev_core::{Error, LidarScenario, MassBudget, ScenarioSpace, SpeedUnit, VehicleSpec};

use crate::inputs::Resolver;
use crate::manifest::RunManifest;
use crate::reports::{
    degrade_report, mc_report, range_report, CycleInfo, DegradeReport, DegradeRequest, McRequest, RangeRequest,
    MAX_SERVICE_SAMPLES,
};

pub struct AppState {
    resolver: Resolver,
    workers: Semaphore,
    jobs: Mutex<HashMap<String, JobStatus>>,
    next_job: AtomicU64,
}

impl AppState {
    /// `workers` caps concurrent Monte Carlo and degradation jobs.
    pub fn new(resolver: Resolver, workers: usize) -> Arc<Self> {
        Arc::new(Self {
            resolver,
            workers: Semaphore::new(workers.max(1)),
            jobs: Mutex::new(HashMap::new()),
            next_job: AtomicU64::new(1),
        })
    }

    fn set_job(&self, id: &str, status: JobStatus) {
        self.jobs.lock().unwrap().insert(id.to_string(), status);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: u16,
    pub code: String,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self { status: status.as_u16(), code: code.to_string(), message: message.into() }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        match &e {
            Error::UnknownBundled { kind: "vehicle", .. } => Self::new(StatusCode::NOT_FOUND, "unknown_vehicle", message),
            Error::UnknownBundled { kind: "cycle", .. } => Self::new(StatusCode::NOT_FOUND, "unknown_cycle", message),
            _ if e.is_input_error() => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_input", message),
            _ => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "numerical_failure", message),
        }
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    manifest: Option<RunManifest>,
    #[serde(flatten)]
    error: &'a ApiError,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        let body = ErrorBody { manifest: RunManifest::new("error").ok(), error: &self };
        (status, Json(serde_json::to_value(&body).unwrap_or_default())).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "malformed_body", e.to_string()))
}

fn service_manifest(command: &str) -> Result<RunManifest, ApiError> {
    Ok(RunManifest::new(command)?)
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/v1/vehicles", get(vehicles))
        .route("/v1/cycles", get(cycles))
        .route("/v1/scenario", get(scenario))
        .route("/v1/presets", get(presets))
        .route("/v1/range", post(range))
        .route("/v1/montecarlo", post(montecarlo))
        .route("/v1/degrade", post(degrade))
        .route("/v1/jobs/{id}", get(job))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint") })
        .with_state(state)
}

#[derive(Serialize)]
struct VehicleEntry {
    id: String,
    spec: VehicleSpec,
}

#[derive(Serialize)]
struct VehicleList {
    manifest: RunManifest,
    vehicles: Vec<VehicleEntry>,
}

async fn vehicles(State(state): State<Arc<AppState>>) -> ApiResult<VehicleList> {
    let vehicles = state
        .resolver
        .vehicle_ids()
        .into_iter()
        .map(|id| Ok(VehicleEntry { spec: state.resolver.vehicle(&id)?.value, id }))
        .collect::<Result<_, Error>>()?;
    Ok(Json(VehicleList { manifest: service_manifest("vehicles")?, vehicles }))
}

#[derive(Serialize)]
struct CycleList {
    manifest: RunManifest,
    cycles: Vec<CycleInfo>,
}

async fn cycles(State(state): State<Arc<AppState>>) -> ApiResult<CycleList> {
    let cycles = state
        .resolver
        .cycle_ids()
        .into_iter()
        .map(|id| Ok(CycleInfo::of(&id, &state.resolver.cycle(&id, SpeedUnit::Mps)?.value)))
        .collect::<Result<_, Error>>()?;
    Ok(Json(CycleList { manifest: service_manifest("cycles")?, cycles }))
}

#[derive(Serialize)]
struct ScenarioBounds {
    manifest: RunManifest,
    with_lidar: ScenarioSpace,
    without_lidar: ScenarioSpace,
    mass_budget: MassBudget,
    max_samples: usize,
}

async fn scenario() -> ApiResult<ScenarioBounds> {
    Ok(Json(ScenarioBounds {
        manifest: service_manifest("scenario")?,
        with_lidar: ScenarioSpace::new(LidarScenario::WithLidar),
        without_lidar: ScenarioSpace::new(LidarScenario::WithoutLidar),
        mass_budget: MassBudget::default(),
        max_samples: MAX_SERVICE_SAMPLES,
    }))
}

#[derive(Serialize)]
struct PresetEntry {
    #[serde(flatten)]
    preset: HardwarePreset,
    sensor_power: f64,
}

#[derive(Serialize)]
struct PresetList {
    manifest: RunManifest,
    presets: Vec<PresetEntry>,
}

async fn presets() -> ApiResult<PresetList> {
    let presets = bundled_presets()?
        .into_iter()
        .map(|p| PresetEntry { sensor_power: p.sensor_power(), preset: p })
        .collect();
    Ok(Json(PresetList { manifest: service_manifest("presets")?, presets }))
}

async fn range(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    let req: RangeRequest = match parse(&body) {
        Ok(r) => r,
        Err(e) => return e.into_response(),
    };
    let result = tokio::task::spawn_blocking(move || range_report(&state.resolver, &req)).await;
    match result {
        Ok(Ok(report)) => Json(report).into_response(),
        Ok(Err(e)) => ApiError::from(e).into_response(),
        Err(e) => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()).into_response(),
    }
}

async fn montecarlo(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    let req: McRequest = match parse(&body) {
        Ok(r) => r,
        Err(e) => return e.into_response(),
    };
    if req.n_samples > MAX_SERVICE_SAMPLES {
        return ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "n_over_cap",
            format!("n_samples {} exceeds {MAX_SERVICE_SAMPLES}", req.n_samples),
        )
        .into_response();
    }
    let Ok(_permit) = state.workers.acquire().await else {
        return ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "shutting_down", "worker pool closed").into_response();
    };
    let worker = state.clone();
    match tokio::task::spawn_blocking(move || mc_report(&worker.resolver, &req, None)).await {
        Ok(Ok(report)) => Json(report).into_response(),
        Ok(Err(e)) => ApiError::from(e).into_response(),
        Err(e) => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()).into_response(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum JobStatus {
    Queued,
    Running,
    Done { result: Box<DegradeReport> },
    Failed { error: ApiError },
}

#[derive(Serialize)]
struct JobBody {
    manifest: RunManifest,
    job_id: String,
    #[serde(flatten)]
    status: JobStatus,
}

async fn degrade(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    let req: DegradeRequest = match parse(&body) {
        Ok(r) => r,
        Err(e) => return e.into_response(),
    };
    // Resolve up front so unknown inputs fail the request rather than the job.
    if let Err(e) = state.resolver.vehicle(&req.vehicle).and_then(|_| state.resolver.cycle(&req.cycle, req.units)) {
        return ApiError::from(e).into_response();
    }
    let id = format!("job-{}", state.next_job.fetch_add(1, Ordering::Relaxed));
    state.set_job(&id, JobStatus::Queued);
    let job_id = id.clone();
    let worker = state.clone();
    tokio::spawn(async move {
        let Ok(_permit) = worker.workers.acquire().await else { return };
        worker.set_job(&job_id, JobStatus::Running);
        let inner = worker.clone();
        let outcome = tokio::task::spawn_blocking(move || degrade_report(&inner.resolver, &req)).await;
        let status = match outcome {
            Ok(Ok(report)) => JobStatus::Done { result: Box::new(report) },
            Ok(Err(e)) => JobStatus::Failed { error: e.into() },
            Err(e) => JobStatus::Failed { error: ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()) },
        };
        worker.set_job(&job_id, status);
    });
    match service_manifest("degrade") {
        Ok(manifest) => (StatusCode::ACCEPTED, Json(JobBody { manifest, job_id: id, status: JobStatus::Queued })).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn job(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Response {
    let status = state.jobs.lock().unwrap().get(&id).cloned();
    let Some(status) = status else {
        return ApiError::new(StatusCode::NOT_FOUND, "unknown_job", format!("no job '{id}'")).into_response();
    };
    match service_manifest("job") {
        Ok(manifest) => Json(JobBody { manifest, job_id: id, status }).into_response(),
        Err(e) => e.into_response(),
    }
}

/// Bind and serve until the process is stopped.
pub fn serve(resolver: Resolver, bind: &str, port: u16, workers: Option<usize>) -> std::io::Result<()> {
    let workers = workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, usize::from));
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind((bind, port)).await?;
        eprintln!("aev-range listening on http://{}", listener.local_addr()?);
        axum::serve(listener, router(AppState::new(resolver, workers))).await
    })
}

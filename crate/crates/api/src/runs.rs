use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};

use aroi_core::models::Family;
use aroi_core::roi::{roi_curve, sensitivity as sensitivity_report, CostParams, RoiGrid, SensitivityReport};
use aroi_core::store::{Progress, RunRecord, RunStatus};
use aroi_core::sweep::{CsvOptions, SweepConfig, SweepResult};

use crate::{ApiError, ApiJson, AppState};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateRun {
    pub dataset_hash: String,
    #[serde(default)]
    pub config: SweepConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JobHandle {
    pub run_id: String,
    pub status: RunStatus,
    pub progress: Progress,
}

impl From<&RunRecord> for JobHandle {
    fn from(r: &RunRecord) -> Self {
        Self {
            run_id: r.run_id.clone(),
            status: r.status,
            progress: r.progress,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivityRequest {
    pub family: Family,
    pub fraction: f64,
    pub param: String,
    pub values: Vec<f64>,
    /// Values for the parameters held fixed; reference values by default.
    #[serde(default)]
    pub params: CostParams,
}

#[derive(Debug, Default, Deserialize)]
pub(crate) struct RoiQuery {
    #[serde(default)]
    save: bool,
}

/// Queues a run on the bounded runner pool.
pub(crate) fn spawn_run(state: &AppState, run_id: String) {
    let inner = state.0.clone();
    tokio::spawn(async move {
        let Ok(_permit) = inner.runners.clone().acquire_owned().await else {
            return;
        };
        let threads = inner.config.sweep_threads;
        let store = inner.store.clone();
        let id = run_id.clone();
        let outcome = tokio::task::spawn_blocking(move || store.execute_run(&id, threads)).await;
        let failure = match outcome {
            Ok(Ok(_)) => None,
            Ok(Err(e)) => Some(e.to_string()),
            Err(e) => Some(format!("run task aborted: {e}")),
        };
        if let Some(message) = failure {
            if let Ok(mut rec) = inner.store.get_run(&run_id) {
                if !rec.status.is_terminal() {
                    if rec.status == RunStatus::Pending {
                        rec.status = RunStatus::Running;
                        let _ = inner.store.update_run(&rec);
                    }
                    rec.status = RunStatus::Failed;
                    rec.error = Some(message);
                    let _ = inner.store.update_run(&rec);
                }
            }
        }
    });
}

pub(crate) async fn create_run(
    State(state): State<AppState>,
    ApiJson(req): ApiJson<CreateRun>,
) -> Result<(StatusCode, Json<JobHandle>), ApiError> {
    req.config.validate()?;
    if !state.0.store.has_dataset(&req.dataset_hash) {
        return Err(ApiError::not_found("dataset", &req.dataset_hash).with_field("dataset_hash"));
    }
    let manifest = serde_json::to_string_pretty(&req.config).expect("config serializes");
    let rec = state
        .0
        .store
        .create_run(&req.dataset_hash, req.config, Some(manifest))?;
    spawn_run(&state, rec.run_id.clone());
    Ok((StatusCode::ACCEPTED, Json(JobHandle::from(&rec))))
}

pub(crate) async fn list_runs(State(state): State<AppState>) -> Result<Json<Vec<JobHandle>>, ApiError> {
    let runs = state.0.store.list_runs()?;
    Ok(Json(runs.iter().map(JobHandle::from).collect()))
}

pub(crate) async fn get_run(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<RunRecord>, ApiError> {
    Ok(Json(state.0.store.get_run(&id)?))
}

pub(crate) async fn get_csv(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let rec = state.0.store.get_run(&id)?;
    let result = evaluable(&rec)?;
    let csv = result.to_csv(&CsvOptions {
        include_timing: false,
        manifest_sha256: rec.manifest_sha256(),
    });
    Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], csv).into_response())
}

fn evaluable(rec: &RunRecord) -> Result<&SweepResult, ApiError> {
    match (&rec.status, &rec.result) {
        (RunStatus::Done | RunStatus::Partial, Some(result)) => Ok(result),
        (status, _) => Err(ApiError::new(
            StatusCode::CONFLICT,
            "RUN_NOT_EVALUABLE",
            format!("run is {status:?}; ROI needs a DONE or PARTIAL run"),
        )),
    }
}

pub(crate) async fn roi(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<RoiQuery>,
    ApiJson(params): ApiJson<CostParams>,
) -> Result<Json<RoiGrid>, ApiError> {
    let rec = state.0.store.get_run(&id)?;
    let grid = roi_curve(evaluable(&rec)?, &params)?;
    if q.save {
        state.0.store.save_roi_snapshot(&id, &grid)?;
    }
    Ok(Json(grid))
}

pub(crate) async fn sensitivity(
    State(state): State<AppState>,
    Path(id): Path<String>,
    ApiJson(req): ApiJson<SensitivityRequest>,
) -> Result<Json<SensitivityReport>, ApiError> {
    let rec = state.0.store.get_run(&id)?;
    let result = evaluable(&rec)?;
    let cell = result.cell(req.family, req.fraction).ok_or_else(|| {
        ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "CELL_NOT_EVALUABLE",
            format!("run has no {} cell at fraction {}", req.family, req.fraction),
        )
    })?;
    Ok(Json(sensitivity_report(cell, &req.params, &req.param, &req.values)?))
}

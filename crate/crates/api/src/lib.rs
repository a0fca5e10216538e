//! HTTP service over the workbench.
//!
//! | method | path | body | reply |
//! |---|---|---|---|
//! | GET | `/health` | | `{"status":"ok"}` |
//! | POST | `/datasets` | multipart: `file`, `text_a`, `text_b`, `label`, optional `id`, `name`, `positive`, `negative` | [`datasets::UploadResponse`] |
//! | GET | `/datasets/{hash}` | | [`datasets::DatasetView`] |
//! | POST | `/runs` | [`runs::CreateRun`] | 202 [`runs::JobHandle`] |
//! | GET | `/runs` | | `[JobHandle]`, newest first |
//! | GET | `/runs/{id}` | | `RunRecord` |
//! | GET | `/runs/{id}/csv` | | sweep CSV |
//! | POST | `/runs/{id}/roi` | `CostParams` (`?save=true` keeps a snapshot) | `RoiGrid` |
//! | POST | `/runs/{id}/sensitivity` | [`runs::SensitivityRequest`] | `SensitivityReport` |
//! | POST | `/al/sessions` | [`sessions::CreateSession`] | [`sessions::SessionView`] |
//! | GET | `/al/sessions/{id}` | | [`sessions::SessionView`] |
//! | GET | `/al/sessions/{id}/batch` | | `QueryBatch`, or 204 once stopped |
//! | POST | `/al/sessions/{id}/labels` | `{"<id>": "DEPENDENT", ...}` | [`sessions::SessionView`] |
//!
//! Errors are JSON [`ErrorBody`] values whose `code` is one of
//! [`ERROR_CODES`]. When a token is configured every route except
//! `/health` requires `Authorization: Bearer <token>`.

mod datasets;
mod error;
mod runs;
mod sessions;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use axum::extract::{DefaultBodyLimit, FromRequest, Request, State};
use axum::http::{header, StatusCode};
use axum::middleware::{self, Next};
use axum::response::Response;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use tokio::net::TcpListener;
use tokio::sync::Semaphore;

use aroi_core::store::{RunStatus, Store, StoreError};

pub use datasets::{DatasetView, UploadResponse};
pub use error::{ApiError, ErrorBody, ERROR_CODES};
pub use runs::{CreateRun, JobHandle, SensitivityRequest};
pub use sessions::{CreateSession, SessionView};

/// Default cap on an uploaded CSV.
pub const DEFAULT_MAX_UPLOAD_BYTES: usize = 32 * 1024 * 1024;

#[derive(Clone, Debug)]
pub struct ApiConfig {
    pub store_root: PathBuf,
    /// Runs executing at once. Further runs wait in PENDING.
    pub workers: usize,
    /// Threads per run; 0 shares the process-wide pool.
    pub sweep_threads: usize,
    pub token: Option<String>,
    pub max_upload_bytes: usize,
}

impl ApiConfig {
    pub fn new(store_root: impl Into<PathBuf>) -> Self {
        Self {
            store_root: store_root.into(),
            workers: 1,
            sweep_threads: 0,
            token: None,
            max_upload_bytes: DEFAULT_MAX_UPLOAD_BYTES,
        }
    }
}

type SessionSlot = Arc<tokio::sync::Mutex<Option<aroi_core::active::ActiveSession>>>;

pub(crate) struct Inner {
    pub(crate) store: Store,
    pub(crate) config: ApiConfig,
    pub(crate) runners: Arc<Semaphore>,
    /// Live sessions, rebuilt from the store on first touch.
    pub(crate) sessions: Mutex<HashMap<String, SessionSlot>>,
}

#[derive(Clone)]
pub struct AppState(pub(crate) Arc<Inner>);

impl AppState {
    /// Opens the store and requeues work left behind by a previous process:
    /// PENDING runs are started again and RUNNING ones are marked FAILED.
    pub fn open(config: ApiConfig) -> Result<Self, StoreError> {
        let store = Store::open(&config.store_root)?;
        let state = AppState(Arc::new(Inner {
            runners: Arc::new(Semaphore::new(config.workers.max(1))),
            store,
            config,
            sessions: Mutex::new(HashMap::new()),
        }));
        Ok(state)
    }

    pub fn store(&self) -> &Store {
        &self.0.store
    }

    /// Must be called from inside a tokio runtime.
    pub fn recover(&self) -> Result<usize, StoreError> {
        let mut requeued = 0;
        for mut rec in self.store().list_runs()? {
            match rec.status {
                RunStatus::Pending => {
                    runs::spawn_run(self, rec.run_id.clone());
                    requeued += 1;
                }
                RunStatus::Running => {
                    rec.status = RunStatus::Failed;
                    rec.error = Some("interrupted by a service restart".into());
                    self.store().update_run(&rec)?;
                }
                _ => {}
            }
        }
        Ok(requeued)
    }
}

/// JSON body extractor whose rejections are [`ApiError`]s.
pub(crate) struct ApiJson<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for ApiJson<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        let bytes = axum::body::Bytes::from_request(req, state)
            .await
            .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "INVALID_JSON", e.body_text()))?;
        let body: &[u8] = if bytes.iter().all(u8::is_ascii_whitespace) {
            b"{}"
        } else {
            &bytes
        };
        serde_json::from_slice(body)
            .map(ApiJson)
            .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "INVALID_JSON", e.to_string()))
    }
}

async fn require_token(State(state): State<AppState>, req: Request, next: Next) -> Result<Response, ApiError> {
    if let Some(token) = &state.0.config.token {
        let ok = req
            .headers()
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .is_some_and(|t| t == token);
        if !ok {
            return Err(ApiError::new(
                StatusCode::UNAUTHORIZED,
                "UNAUTHORIZED",
                "missing or wrong bearer token",
            ));
        }
    }
    Ok(next.run(req).await)
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

async fn fallback() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "NOT_FOUND", "no such route")
}

pub fn router(state: AppState) -> Router {
    let protected = Router::new()
        .route("/datasets", post(datasets::upload).layer(DefaultBodyLimit::disable()))
        .route("/datasets/{hash}", get(datasets::get_dataset))
        .route("/runs", post(runs::create_run).get(runs::list_runs))
        .route("/runs/{id}", get(runs::get_run))
        .route("/runs/{id}/csv", get(runs::get_csv))
        .route("/runs/{id}/roi", post(runs::roi))
        .route("/runs/{id}/sensitivity", post(runs::sensitivity))
        .route("/al/sessions", post(sessions::create))
        .route("/al/sessions/{id}", get(sessions::get))
        .route("/al/sessions/{id}/batch", get(sessions::batch))
        .route("/al/sessions/{id}/labels", post(sessions::labels))
        .route_layer(middleware::from_fn_with_state(state.clone(), require_token));
    Router::new()
        .route("/health", get(health))
        .merge(protected)
        .fallback(fallback)
        .with_state(state)
}

/// Serves until the listener fails. Requeues leftover runs first.
pub async fn serve(listener: TcpListener, config: ApiConfig) -> std::io::Result<()> {
    let state = AppState::open(config).map_err(std::io::Error::other)?;
    state.recover().map_err(std::io::Error::other)?;
    axum::serve(listener, router(state)).await
}

/// Binds `addr` and serves on a background task, returning the bound
/// address. Intended for tests and examples.
pub async fn spawn(addr: SocketAddr, config: ApiConfig) -> std::io::Result<SocketAddr> {
    let listener = TcpListener::bind(addr).await?;
    let bound = listener.local_addr()?;
    let state = AppState::open(config).map_err(std::io::Error::other)?;
    state.recover().map_err(std::io::Error::other)?;
    tokio::spawn(async move {
        let _ = axum::serve(listener, router(state)).await;
    });
    Ok(bound)
}

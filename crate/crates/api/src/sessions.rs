use std::collections::BTreeMap;
use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};

use aroi_core::active::{ALConfig, ALState, ActiveSession};
use aroi_core::dataset::Label;
use aroi_core::store::SessionRecord;

use crate::{ApiError, ApiJson, AppState, SessionSlot};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub dataset_hash: String,
    #[serde(default)]
    pub config: ALConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub dataset_hash: String,
    pub config: ALConfig,
    pub state: ALState,
}

impl From<SessionRecord> for SessionView {
    fn from(r: SessionRecord) -> Self {
        Self {
            session_id: r.session_id,
            dataset_hash: r.dataset_hash,
            config: r.config,
            state: r.state,
        }
    }
}

fn join_error(e: tokio::task::JoinError) -> ApiError {
    ApiError::internal(format!("session task aborted: {e}"))
}

fn slot(state: &AppState, id: &str) -> SessionSlot {
    let mut map = state.0.sessions.lock().expect("session map lock");
    map.entry(id.to_string()).or_default().clone()
}

/// Runs `f` on the live session with the session's lock held, rebuilding it
/// from the store when this process has not seen it yet, and persists the
/// new state afterwards.
async fn with_session<T, F>(state: &AppState, id: String, f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce(&mut ActiveSession) -> Result<T, ApiError> + Send + 'static,
{
    let store = state.0.store.clone();
    let record = store.get_session(&id)?;
    let guard = Arc::clone(&slot(state, &id)).lock_owned().await;
    tokio::task::spawn_blocking(move || {
        let mut guard = guard;
        if guard.is_none() {
            let ds = store.get_dataset(&record.dataset_hash)?;
            *guard = Some(ActiveSession::restore(&ds, &record.config, record.state.clone())?);
        }
        let session = guard.as_mut().expect("session restored above");
        let before = session.state().clone();
        let out = f(session)?;
        if session.state() != &before {
            let mut record = record;
            record.state = session.state().clone();
            store.save_session(&record)?;
        }
        Ok(out)
    })
    .await
    .map_err(join_error)?
}

pub(crate) async fn create(
    State(state): State<AppState>,
    ApiJson(req): ApiJson<CreateSession>,
) -> Result<(StatusCode, Json<SessionView>), ApiError> {
    req.config.validate()?;
    let store = state.0.store.clone();
    let (record, session) = tokio::task::spawn_blocking(move || -> Result<_, ApiError> {
        let ds = store.get_dataset(&req.dataset_hash)?;
        let session = ActiveSession::start(&ds, &req.config)?;
        let record = store.create_session(&req.dataset_hash, req.config, session.state().clone())?;
        Ok((record, session))
    })
    .await
    .map_err(join_error)??;
    *slot(&state, &record.session_id).lock().await = Some(session);
    Ok((StatusCode::CREATED, Json(record.into())))
}

pub(crate) async fn get(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<SessionView>, ApiError> {
    let live = slot(&state, &id);
    let live = live.lock().await;
    let mut record = state.0.store.get_session(&id)?;
    if let Some(session) = live.as_ref() {
        record.state = session.state().clone();
    }
    Ok(Json(record.into()))
}

/// Issues (or re-issues) the pending batch; 204 once the session stopped.
pub(crate) async fn batch(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let batch = with_session(&state, id, |s| Ok(s.next_batch()?)).await?;
    Ok(match batch {
        Some(b) => Json(b).into_response(),
        None => StatusCode::NO_CONTENT.into_response(),
    })
}

pub(crate) async fn labels(
    State(state): State<AppState>,
    Path(id): Path<String>,
    ApiJson(answers): ApiJson<BTreeMap<String, Label>>,
) -> Result<Json<SessionView>, ApiError> {
    with_session(&state, id.clone(), move |s| {
        s.submit_labels(&answers)?;
        Ok(())
    })
    .await?;
    let record = state.0.store.get_session(&id)?;
    Ok(Json(record.into()))
}

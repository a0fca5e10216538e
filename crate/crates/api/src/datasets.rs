use axum::extract::{Multipart, Path, State};
use axum::http::StatusCode;
use axum::Json;
use serde::{Deserialize, Serialize};

use aroi_core::dataset::{ingest_csv, summarize, ColumnMap, DatasetSummary, LabelVocab, Rejection};

use crate::{ApiError, AppState};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UploadResponse {
    pub dataset_hash: String,
    pub name: String,
    pub summary: DatasetSummary,
    pub rejections: Vec<Rejection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetView {
    pub dataset_hash: String,
    pub name: String,
    pub summary: DatasetSummary,
}

fn bad_multipart(e: impl std::fmt::Display) -> ApiError {
    ApiError::new(StatusCode::BAD_REQUEST, "INVALID_MULTIPART", e.to_string())
}

fn too_large(limit: usize) -> ApiError {
    ApiError::new(
        StatusCode::PAYLOAD_TOO_LARGE,
        "TOO_LARGE",
        format!("upload exceeds {limit} bytes"),
    )
}

pub(crate) async fn upload(
    State(state): State<AppState>,
    mut form: Multipart,
) -> Result<Json<UploadResponse>, ApiError> {
    let limit = state.0.config.max_upload_bytes;
    let mut file: Option<Vec<u8>> = None;
    let mut text = std::collections::BTreeMap::<String, String>::new();
    while let Some(mut field) = form.next_field().await.map_err(bad_multipart)? {
        let name = field.name().unwrap_or_default().to_string();
        if name == "file" {
            let mut buf = Vec::new();
            while let Some(chunk) = field.chunk().await.map_err(bad_multipart)? {
                if buf.len() + chunk.len() > limit {
                    return Err(too_large(limit));
                }
                buf.extend_from_slice(&chunk);
            }
            file = Some(buf);
        } else {
            let value = field.text().await.map_err(bad_multipart)?;
            if value.len() > 4096 {
                return Err(too_large(4096).with_field(name));
            }
            text.insert(name, value);
        }
    }
    let file = file.ok_or_else(|| bad_multipart("missing `file` part").with_field("file"))?;
    let column = |key: &str, default: &str| text.get(key).cloned().unwrap_or_else(|| default.to_string());
    let mut map = ColumnMap::new(
        column("text_a", "text_a"),
        column("text_b", "text_b"),
        column("label", "label"),
    );
    if let Some(id) = text.get("id") {
        map = map.with_id(id.clone());
    }
    if text.contains_key("positive") || text.contains_key("negative") {
        let d = LabelVocab::default();
        map = map.with_vocab(LabelVocab {
            positive: text.get("positive").cloned().unwrap_or(d.positive),
            negative: text.get("negative").cloned().unwrap_or(d.negative),
        });
    }
    let name = column("name", "upload");

    let store = state.0.store.clone();
    tokio::task::spawn_blocking(move || -> Result<Json<UploadResponse>, ApiError> {
        let ingested = ingest_csv(file.as_slice(), &map, name.clone())?;
        let hash = store.put_dataset(&ingested.dataset)?;
        let meta = store.dataset_meta(&hash)?;
        Ok(Json(UploadResponse {
            dataset_hash: hash,
            name: meta.name,
            summary: summarize(&ingested.dataset),
            rejections: ingested.report.rejected,
        }))
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))?
}

pub(crate) async fn get_dataset(
    State(state): State<AppState>,
    Path(hash): Path<String>,
) -> Result<Json<DatasetView>, ApiError> {
    let store = state.0.store.clone();
    tokio::task::spawn_blocking(move || -> Result<Json<DatasetView>, ApiError> {
        let ds = store.get_dataset(&hash)?;
        Ok(Json(DatasetView {
            dataset_hash: hash,
            name: ds.name().to_string(),
            summary: summarize(&ds),
        }))
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))?
}

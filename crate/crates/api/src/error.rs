use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};

use aroi_core::active::ActiveError;
use aroi_core::dataset::DatasetError;
use aroi_core::roi::RoiError;
use aroi_core::store::StoreError;
use aroi_core::sweep::SweepError;

/// Every `code` an error body can carry.
pub const ERROR_CODES: &[&str] = &[
    // request shape
    "INVALID_JSON",
    "INVALID_MULTIPART",
    "TOO_LARGE",
    "UNAUTHORIZED",
    "NOT_FOUND",
    "INTERNAL",
    // datasets
    "MISSING_COLUMN",
    "LABEL_CARDINALITY",
    "EMPTY_DATASET",
    "DUPLICATE_ID",
    "EMPTY_TEXT",
    "TOO_SMALL",
    "INVALID_SPLIT",
    "INVALID_SYNTHETIC",
    "INVALID_CSV",
    "CORRUPT_DATASET",
    // runs
    "INVALID_CONFIG",
    "RUN_NOT_EVALUABLE",
    "ALL_CELLS_ERRORED",
    // ROI
    "ZERO_COST",
    "UNKNOWN_PARAMETER",
    "EMPTY_VALUES",
    "INVALID_PARAMS",
    "INVALID_FRACTION",
    "CELL_NOT_EVALUABLE",
    // active learning
    "UNKNOWN_SAMPLE",
    "BUDGET_EXCEEDED",
    "NO_PENDING_BATCH",
    "STATE_MISMATCH",
    "EMPTY_VOCABULARY",
    "INVALID_PIPELINE",
    "SINGLE_CLASS_TRAINING",
    "TOO_FEW_SAMPLES",
    "INVALID_HYPERPARAMS",
];

/// Wire form of an error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub field: Option<String>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
            field: None,
        }
    }

    pub fn with_field(mut self, field: impl Into<String>) -> Self {
        self.field = Some(field.into());
        self
    }

    pub fn not_found(kind: &str, id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "NOT_FOUND", format!("{kind} `{id}` not found"))
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "INTERNAL", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            code: self.code.to_string(),
            message: self.message,
            field: self.field,
        };
        (self.status, Json(body)).into_response()
    }
}

impl From<DatasetError> for ApiError {
    fn from(e: DatasetError) -> Self {
        let field = match &e {
            DatasetError::MissingColumn(c) => Some(c.clone()),
            _ => None,
        };
        let status = match e {
            DatasetError::Corrupt(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::BAD_REQUEST,
        };
        let mut err = ApiError::new(status, e.code(), e.to_string());
        err.field = field;
        err
    }
}

impl From<RoiError> for ApiError {
    fn from(e: RoiError) -> Self {
        let status = match e {
            RoiError::CellNotEvaluable { .. } => StatusCode::CONFLICT,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        let mut err = ApiError::new(status, e.code(), e.to_string());
        if let RoiError::UnknownParameter(p) = &e {
            err.field = Some(p.clone());
        }
        err
    }
}

impl From<SweepError> for ApiError {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::Dataset(d) => d.into(),
            other => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, other.code(), other.to_string()),
        }
    }
}

impl From<ActiveError> for ApiError {
    fn from(e: ActiveError) -> Self {
        let status = match e {
            ActiveError::UnknownSample(_) | ActiveError::NoPendingBatch => StatusCode::CONFLICT,
            ActiveError::StateMismatch(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::NotFound { kind, id } => ApiError::not_found(kind, &id),
            StoreError::Dataset(d) => d.into(),
            other => ApiError::internal(other.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mapped_codes_are_documented() {
        let samples: Vec<ApiError> = vec![
            DatasetError::MissingColumn("label".into()).into(),
            RoiError::ZeroCost.into(),
            RoiError::UnknownParameter("x".into()).into(),
            ActiveError::NoPendingBatch.into(),
            ActiveError::BudgetExceeded {
                spent: 1,
                requested: 2,
                budget: 2,
            }
            .into(),
            SweepError::InvalidConfig("x".into()).into(),
            StoreError::NotFound {
                kind: "run",
                id: "r".into(),
            }
            .into(),
        ];
        for e in samples {
            assert!(ERROR_CODES.contains(&e.code), "{} missing", e.code);
        }
    }

    #[test]
    fn missing_column_names_the_field() {
        let e: ApiError = DatasetError::MissingColumn("label".into()).into();
        assert_eq!(e.status, StatusCode::BAD_REQUEST);
        assert_eq!(e.field.as_deref(), Some("label"));
    }
}

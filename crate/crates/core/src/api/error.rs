use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use serde_json::{json, Value};

use crate::session::SessionError;
use crate::stats::ReportError;
use crate::store::StoreError;

/// Error body returned by every route: `{"code", "message", "detail"?}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<Value>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self { status, code, message: message.into(), detail: None }
    }

    pub fn with_detail(mut self, detail: Value) -> Self {
        self.detail = Some(detail);
        self
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "validation_failed", message)
    }

    pub fn not_found(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, code, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(&self)).into_response()
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let message = e.to_string();
        match e {
            SessionError::Protocol(_) => Self::new(StatusCode::CONFLICT, "protocol_violation", message),
            SessionError::InvalidPlace(place) => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_place", message)
                .with_detail(json!({ "place": place })),
            SessionError::Malformed(_) => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "malformed_response", message),
            SessionError::Incomplete { kind, answered } => Self::new(StatusCode::CONFLICT, "phase_incomplete", message)
                .with_detail(json!({ "test": kind, "answered": answered })),
            SessionError::NotDue { due } => Self::new(StatusCode::CONFLICT, "retention_not_due", message)
                .with_detail(json!({ "due": due })),
            SessionError::Validation(_) => Self::validation(message),
        }
    }
}

impl From<ReportError> for ApiError {
    fn from(e: ReportError) -> Self {
        let message = e.to_string();
        match e {
            ReportError::NoAppCohort => Self::new(StatusCode::CONFLICT, "no_data", message),
            ReportError::UnknownTable(_) => Self::not_found("unknown_table", message),
            ReportError::Unbuildable { table, reason } => Self::new(StatusCode::CONFLICT, "table_unavailable", message)
                .with_detail(json!({ "table": table, "reason": reason })),
            ReportError::Stats { table, .. } => Self::new(StatusCode::CONFLICT, "table_unavailable", message)
                .with_detail(json!({ "table": table })),
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let message = e.to_string();
        match e {
            StoreError::Session(inner) => inner.into(),
            StoreError::UnknownSession(_) => Self::not_found("session_not_found", message),
            StoreError::UnknownStudent(_) => Self::not_found("student_not_found", message),
            StoreError::DuplicateStudent(_) => Self::new(StatusCode::CONFLICT, "student_exists", message),
            StoreError::Conflict { session, .. } => Self::new(StatusCode::CONFLICT, "active_session_exists", message)
                .with_detail(json!({ "session_id": session })),
            StoreError::Validation(_) => Self::validation(message),
            StoreError::Import(rows) => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "import_rejected", message)
                .with_detail(json!(rows
                    .iter()
                    .map(|r| json!({ "line": r.line, "message": r.message }))
                    .collect::<Vec<_>>())),
            StoreError::Report(inner) => inner.into(),
            StoreError::Corrupt { .. } => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "log_corrupt", message),
            StoreError::Io(_) => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "storage_failure", message),
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        match e {
            JsonRejection::JsonDataError(_) => Self::validation(e.body_text()),
            _ => Self::bad_request(e.body_text()),
        }
    }
}

impl From<QueryRejection> for ApiError {
    fn from(e: QueryRejection) -> Self {
        Self::bad_request(e.body_text())
    }
}

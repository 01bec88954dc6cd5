use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;
use tap_core::solver::Progress;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("no session {0:?}")]
    NotFound(String),
    #[error("invalid instance: {0}")]
    BadInstance(String),
    #[error("bad edit: {0}")]
    BadEdit(String),
    #[error("{0}")]
    BadConfig(String),
    #[error("invalid request: {0}")]
    BadRequest(String),
    #[error("a solve is already running for this session")]
    Busy { progress: Option<Progress> },
    #[error("the session has no outcome yet")]
    NoOutcome,
    #[error("edits arrived after the last solve")]
    Stale,
    #[error("the last solve found no schedule")]
    NoSchedule,
    #[error("internal error: {0}")]
    Internal(String),
}

impl ServiceError {
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::NotFound(_) => "not_found",
            ServiceError::BadInstance(_) => "bad_instance",
            ServiceError::BadEdit(_) => "bad_edit",
            ServiceError::BadConfig(_) => "bad_config",
            ServiceError::BadRequest(_) => "bad_request",
            ServiceError::Busy { .. } => "busy",
            ServiceError::NoOutcome => "no_outcome",
            ServiceError::Stale => "stale",
            ServiceError::NoSchedule => "no_schedule",
            ServiceError::Internal(_) => "internal",
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::BadInstance(_) | ServiceError::BadEdit(_) | ServiceError::BadConfig(_) | ServiceError::BadRequest(_) => {
                StatusCode::BAD_REQUEST
            }
            ServiceError::Busy { .. } | ServiceError::NoOutcome | ServiceError::Stale | ServiceError::NoSchedule => StatusCode::CONFLICT,
            ServiceError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let mut body = json!({"error": self.code(), "message": self.to_string()});
        if let ServiceError::Busy { progress } = &self {
            body["progress"] = json!(progress);
        }
        (self.status(), Json(body)).into_response()
    }
}

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;

use arcle_core::EnvError;

/// Error body: `{"error": {"code": ..., "message": ...}}`.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn not_found(code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::NOT_FOUND,
            code,
            message: message.into(),
        }
    }

    pub fn unprocessable(code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::UNPROCESSABLE_ENTITY,
            code,
            message: message.into(),
        }
    }

    pub fn unknown_session(id: &str) -> Self {
        Self::not_found("unknown_session", format!("no session {id}"))
    }
}

impl From<EnvError> for ApiError {
    fn from(e: EnvError) -> Self {
        let message = e.to_string();
        match e {
            EnvError::EpisodeOver => ApiError {
                status: StatusCode::CONFLICT,
                code: "episode_over",
                message,
            },
            EnvError::IllegalOp(_) => Self::unprocessable("illegal_operation", message),
            EnvError::Selection(_) => Self::unprocessable("bad_selection", message),
            EnvError::PairIndex { .. } => Self::unprocessable("pair_index", message),
            EnvError::EmptyTask(_) => Self::unprocessable("empty_task", message),
            EnvError::NotReset => ApiError {
                status: StatusCode::INTERNAL_SERVER_ERROR,
                code: "not_reset",
                message,
            },
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "error": { "code": self.code, "message": self.message } });
        (self.status, Json(body)).into_response()
    }
}

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use crafteam_core::persistence::PersistError;
use crafteam_core::reflection::ReflectionError;
use crafteam_core::session::{HumanActionError, RejectionRule, SessionError};
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Error codes outside the rejection rules.
pub const CODES: [&str; 10] = [
    "invalid_config",
    "not_found",
    "malformed_body",
    "bad_action",
    "not_sealed",
    "session_ended",
    "session_exists",
    "invalid_time_scale",
    "provider_error",
    "internal",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub details: Option<Value>,
    #[serde(skip)]
    pub status: u16,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            code: code.to_string(),
            message: message.into(),
            details: None,
            status: status.as_u16(),
        }
    }

    pub fn with_details(mut self, details: impl Serialize) -> Self {
        self.details = serde_json::to_value(details).ok();
        self
    }

    pub fn not_found(what: impl Into<String>) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "not_found", what)
    }

    pub fn malformed(detail: impl std::fmt::Display) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "malformed_body", detail.to_string())
    }

    pub fn internal(detail: impl std::fmt::Display) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", detail.to_string())
    }

    pub fn rejected(rule: RejectionRule) -> Self {
        ApiError::new(StatusCode::FORBIDDEN, rule.code(), rule.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::InvalidConfig(report) => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_config", report.to_string())
                    .with_details(report)
            }
            SessionError::Ended => ApiError::new(StatusCode::CONFLICT, "session_ended", e.to_string()),
            SessionError::InvalidTimeScale => {
                ApiError::new(StatusCode::BAD_REQUEST, "invalid_time_scale", e.to_string())
            }
            other => ApiError::internal(other),
        }
    }
}

impl From<HumanActionError> for ApiError {
    fn from(e: HumanActionError) -> Self {
        match e {
            HumanActionError::Rejected { rule, event } => ApiError::rejected(rule).with_details(event),
            HumanActionError::BadAction(m) => ApiError::new(StatusCode::BAD_REQUEST, "bad_action", m),
            HumanActionError::Session(s) => s.into(),
        }
    }
}

impl From<PersistError> for ApiError {
    fn from(e: PersistError) -> Self {
        match e {
            PersistError::NotFound(what) => ApiError::not_found(what),
            other => ApiError::internal(other),
        }
    }
}

impl From<ReflectionError> for ApiError {
    fn from(e: ReflectionError) -> Self {
        match e {
            ReflectionError::NotSealed => ApiError::new(StatusCode::CONFLICT, "not_sealed", e.to_string()),
            other => ApiError::internal(other),
        }
    }
}

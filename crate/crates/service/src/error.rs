use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use duet_core::agents::AgentError;
use duet_core::refine::ConversationError;
use serde::{Deserialize, Serialize};
use serde_json::json;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ErrorCode {
    BadRequest,
    NotFound,
    BackendFailed,
    ParseFailed,
    Conflict,
}

impl ErrorCode {
    pub fn status(self) -> StatusCode {
        match self {
            ErrorCode::BadRequest => StatusCode::BAD_REQUEST,
            ErrorCode::NotFound => StatusCode::NOT_FOUND,
            ErrorCode::BackendFailed => StatusCode::BAD_GATEWAY,
            ErrorCode::ParseFailed => StatusCode::UNPROCESSABLE_ENTITY,
            ErrorCode::Conflict => StatusCode::CONFLICT,
        }
    }
}

/// Body of every non-2xx response: `{"error": {"code": ..., "message": ...}}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
    /// Overrides the code's usual status, for failures inside the server.
    status: Option<StatusCode>,
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        ApiError {
            code,
            message: message.into(),
            status: None,
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        ApiError::new(ErrorCode::BadRequest, message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        ApiError::new(ErrorCode::NotFound, message)
    }

    pub fn conflict(message: impl Into<String>) -> Self {
        ApiError::new(ErrorCode::Conflict, message)
    }

    pub fn backend(message: impl Into<String>) -> Self {
        ApiError::new(ErrorCode::BackendFailed, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        ApiError {
            status: Some(StatusCode::INTERNAL_SERVER_ERROR),
            ..ApiError::new(ErrorCode::BackendFailed, message)
        }
    }

    pub fn status(&self) -> StatusCode {
        self.status.unwrap_or(self.code.status())
    }
}

impl From<AgentError> for ApiError {
    fn from(e: AgentError) -> Self {
        match e {
            AgentError::Backend(_) => ApiError::backend(e.to_string()),
            AgentError::EmptyCritique | AgentError::GenerationUnparseable { .. } => {
                ApiError::new(ErrorCode::ParseFailed, e.to_string())
            }
        }
    }
}

impl From<ConversationError> for ApiError {
    fn from(e: ConversationError) -> Self {
        match e {
            ConversationError::EmptyInstruction | ConversationError::IndexOutOfRange { .. } => {
                ApiError::bad_request(e.to_string())
            }
            ConversationError::ProposalPending
            | ConversationError::NoProposal
            | ConversationError::NothingToUndo => ApiError::conflict(e.to_string()),
            ConversationError::Agent(e) => e.into(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "error": { "code": self.code, "message": self.message } });
        (self.status(), Json(body)).into_response()
    }
}

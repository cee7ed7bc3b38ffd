use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use xannot_core::anchoring::AnchorError;
use xannot_core::presentation::PresentationError;
use xannot_core::Error;

/// The JSON body of every failed request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(default)]
    pub details: Value,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>, details: Value) -> Self {
        ApiError { status, body: ErrorBody { code: code.into(), message: message.into(), details } }
    }

    pub fn malformed(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "MalformedRequest", message, Value::Null)
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::UnknownResource(_) | Error::UnknownSelector(_) | Error::UnknownLink(_) | Error::UnknownEntity(_) => {
                StatusCode::NOT_FOUND
            }
            Error::StoreLocked(_) | Error::IoFailure(_) | Error::Corrupt { .. } => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        if status.is_server_error() {
            tracing::error!(error = %e, "request failed");
        }
        ApiError::new(status, e.code(), e.to_string(), e.details())
    }
}

impl From<PresentationError> for ApiError {
    fn from(e: PresentationError) -> Self {
        let details = match &e {
            PresentationError::DuplicateSelectorId(id)
            | PresentationError::InvalidPosition(id)
            | PresentationError::UnknownAnchor(id)
            | PresentationError::MissingColor(id) => json!({"selector_id": id}),
            PresentationError::WidgetTooWide { link_id, .. }
            | PresentationError::WidgetTooTall { link_id, .. }
            | PresentationError::InvalidWidget(link_id) => json!({"link_id": link_id}),
            PresentationError::MarginOverflow { page_index, side } => json!({"page_index": page_index, "side": side}),
            PresentationError::InvalidMargins(_) => Value::Null,
        };
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.code(), e.to_string(), details)
    }
}

impl From<AnchorError> for ApiError {
    fn from(e: AnchorError) -> Self {
        let details = match &e {
            AnchorError::PageMismatch { selector, snapshot } => json!({"selector": selector, "snapshot": snapshot}),
            AnchorError::EmptyQuote => Value::Null,
        };
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.code(), e.to_string(), details)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

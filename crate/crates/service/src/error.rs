use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use vizkb_core::api::ErrorBody;
use vizkb_core::augment::AugmentError;
use vizkb_core::enumerator::EnumerateError;
use vizkb_core::evaluate::EvalError;
use vizkb_core::labeling::LabelError;
use vizkb_core::training::TrainError;
use vizkb_core::{KbError, SpecError};

#[derive(Debug, thiserror::Error)]
#[error("{message}")]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, message)
    }

    pub fn conflict(message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = self
            .status
            .canonical_reason()
            .unwrap_or("error")
            .to_ascii_lowercase()
            .replace(' ', "_");
        let body = ErrorBody {
            status,
            error: self.message,
        };
        (self.status, Json(body)).into_response()
    }
}

macro_rules! unprocessable {
    ($($t:ty),*) => {$(
        impl From<$t> for ApiError {
            fn from(e: $t) -> Self {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string())
            }
        }
    )*};
}

unprocessable!(SpecError, KbError, EnumerateError, AugmentError, EvalError, TrainError);

impl From<LabelError> for ApiError {
    fn from(e: LabelError) -> Self {
        let status = match &e {
            LabelError::Conflict(_) | LabelError::NotQueued(_) | LabelError::SessionComplete => StatusCode::CONFLICT,
            LabelError::UnknownPair(_) => StatusCode::NOT_FOUND,
            LabelError::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
            LabelError::Llm(_) => StatusCode::BAD_GATEWAY,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        ApiError::new(status, e.to_string())
    }
}

impl From<tokio::task::JoinError> for ApiError {
    fn from(e: tokio::task::JoinError) -> Self {
        ApiError::internal(format!("worker failed: {e}"))
    }
}

pub type ApiResult<T> = Result<T, ApiError>;

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;

/// JSON error body: `{"error": ..., "field": ...}`.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
    pub field: Option<String>,
}

#[derive(Serialize)]
struct Body<'a> {
    error: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    field: Option<&'a str>,
}

impl ApiError {
    pub fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
            field: None,
        }
    }

    pub fn not_found(what: &str, id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, format!("unknown {what} {id}"))
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    /// 422 naming the offending field.
    pub fn out_of_range(field: &str, message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::UNPROCESSABLE_ENTITY,
            message: message.into(),
            field: Some(field.to_string()),
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, message)
    }
}

impl From<resonant_sr::Error> for ApiError {
    fn from(e: resonant_sr::Error) -> Self {
        use resonant_sr::Error as E;
        let message = e.to_string();
        match e {
            E::Range { field, .. } => Self::out_of_range(&field, message),
            E::NotDivisible { .. } | E::UnsupportedStep(_) => Self::out_of_range("step", message),
            E::InvalidArgument(_) | E::ShapeMismatch(_) | E::Search(_) => {
                Self::new(StatusCode::UNPROCESSABLE_ENTITY, message)
            }
            E::Syntax { .. } | E::Pipeline(_) | E::Matrix { .. } => Self::bad_request(message),
            E::BadMagic
            | E::UnsupportedVersion(_)
            | E::Truncated
            | E::InvalidHeader(_)
            | E::InvalidImage(_)
            | E::Image(_) => Self {
                status: StatusCode::BAD_REQUEST,
                message,
                field: Some("image".into()),
            },
            E::Filter { .. } | E::Io(_) => Self::internal(message),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = Body {
            error: &self.message,
            field: self.field.as_deref(),
        };
        (self.status, Json(body)).into_response()
    }
}

pub type ApiResult<T> = Result<T, ApiError>;

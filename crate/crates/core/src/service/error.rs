use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use serde_json::Value;

use crate::actuation::ActuationError;
use crate::error::KinematicsError;
use crate::gcode::GcodeError;
use crate::metrology::MetrologyError;
use crate::robot_file::RobotFileError;

/// Error body: `{"error": "<code>", "message": "...", "detail": {...}}`.
#[derive(Debug, Clone, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: StatusCode,
    pub error: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<Value>,
}

impl ApiError {
    pub fn new(status: StatusCode, error: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            error,
            message: message.into(),
            detail: None,
        }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "invalid_configuration", message)
    }

    pub fn malformed(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "malformed_body", message)
    }

    pub fn not_found(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "unknown_session", format!("no session `{id}`"))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(&self)).into_response()
    }
}

impl From<KinematicsError> for ApiError {
    fn from(e: KinematicsError) -> Self {
        Self::invalid(e.to_string())
    }
}

impl From<GcodeError> for ApiError {
    fn from(e: GcodeError) -> Self {
        Self::invalid(e.to_string())
    }
}

impl From<RobotFileError> for ApiError {
    fn from(e: RobotFileError) -> Self {
        match e {
            RobotFileError::Syntax(m) => Self::malformed(m),
            other => Self::invalid(other.to_string()),
        }
    }
}

impl From<ActuationError> for ApiError {
    fn from(e: ActuationError) -> Self {
        match e {
            ActuationError::Limit { axis, value, min, max } => Self {
                detail: Some(serde_json::json!({
                    "axis": axis.to_string(),
                    "value": value,
                    "min": min,
                    "max": max,
                })),
                ..Self::new(StatusCode::CONFLICT, "joint_limit", e.to_string())
            },
            ActuationError::NotHomed(_) => Self::new(StatusCode::CONFLICT, "not_homed", e.to_string()),
            other => Self::invalid(other.to_string()),
        }
    }
}

impl From<MetrologyError> for ApiError {
    fn from(e: MetrologyError) -> Self {
        match e {
            MetrologyError::MissingRegistration => {
                Self::new(StatusCode::BAD_REQUEST, "missing_registration", e.to_string())
            }
            MetrologyError::DegenerateGeometry(_) => {
                Self::new(StatusCode::BAD_REQUEST, "degenerate_geometry", e.to_string())
            }
            other => Self::invalid(other.to_string()),
        }
    }
}

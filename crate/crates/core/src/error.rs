use thiserror::Error;

/// Errors raised by the kinematics layer and the robot description loader.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum KinematicsError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    /// The resultant curvature vector vanished, so the bending plane is undefined.
    #[error("degenerate bending plane (resultant curvature {resultant_curvature})")]
    DegeneratePlane { resultant_curvature: f64 },
}

pub type Result<T, E = KinematicsError> = std::result::Result<T, E>;

pub(crate) fn invalid_input(msg: impl Into<String>) -> KinematicsError {
    KinematicsError::InvalidInput(msg.into())
}

pub(crate) fn invalid_config(msg: impl Into<String>) -> KinematicsError {
    KinematicsError::InvalidConfiguration(msg.into())
}

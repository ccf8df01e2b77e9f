//! Concentric tube robot kinematics, a virtual G-code actuation unit and the
//! verification experiments built on top of them.
//!
//! * [`kinematics`]: link partitioning, equilibrium curvature and forward
//!   kinematics.
//! * [`gcode`]: emitter and parser for the actuation unit's command subset.
//! * [`actuation`]: the simulated motion board and the accuracy experiment.
//! * [`metrology`]: frame registration and model-vs-measurement experiments.
//! * [`robot_file`]: TOML robot descriptions.
//! * `service` and `cli` (feature `server`): HTTP/WebSocket API and the `ctr`
//!   command line.

pub mod actuation;
#[cfg(feature = "server")]
pub mod cli;
pub mod error;
pub mod gcode;
pub mod kinematics;
pub mod metrology;
pub mod robot_file;
#[cfg(feature = "server")]
pub mod service;

pub use error::KinematicsError;
pub use kinematics::{forward_kinematics, JointConfig, Pose, TubeSpec};
pub use robot_file::Robot;

//! Robot description files.
//!
//! A description is TOML with one `[[tubes]]` table per tube, outermost
//! first, optional `[[axes]]` tables assigning motor axes to each tube's cart,
//! and an optional `[joints]` table holding the initial configuration:
//!
//! ```toml
//! name = "two-tube"
//!
//! [[tubes]]
//! youngs_modulus = 1.7        # GPa
//! outer_diameter = 2.4        # mm
//! inner_diameter = 2.0
//! precurvature = 0.025        # 1/mm, or radius_of_curvature = 40.0 (mm)
//! straight_length = 60.0
//! curved_length = 40.0
//!
//! [[axes]]
//! translation = "X"
//! rotation = "A"
//! steps_per_mm = 800.0
//! steps_per_degree = 8.888
//! offset = 80.0               # deployed length at cart position 0
//! translation_limits = [0.0, 50.0]
//! rotation_limits = [-180.0, 180.0]
//!
//! [joints]
//! translations = [100.0, 160.0]
//! rotations = [0.0, 0.0]
//! ```
//!
//! Every `[[axes]]` field except the letters is optional. Without `[[axes]]`
//! the X/Y/Z and A/B/C defaults apply; without `[joints]` the robot starts at
//! the home position, each tube deployed by its axis offset.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::KinematicsError;
use crate::gcode::{
    AxisAssignment, AxisMap, GcodeError, DEFAULT_ROTATION_LIMITS, DEFAULT_STEPS_PER_DEGREE, DEFAULT_STEPS_PER_MM,
    DEFAULT_TRANSLATION_LIMITS,
};
use crate::kinematics::{validate_tube_set, JointConfig, TubeSpec};

#[derive(Debug, Error)]
pub enum RobotFileError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("malformed robot description: {0}")]
    Syntax(String),

    #[error("tube {tube}: {message}")]
    Tube { tube: usize, message: String },

    #[error(transparent)]
    Kinematics(#[from] KinematicsError),

    #[error(transparent)]
    Axes(#[from] GcodeError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TubeEntry {
    /// GPa
    pub youngs_modulus: f64,
    pub outer_diameter: f64,
    pub inner_diameter: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precurvature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius_of_curvature: Option<f64>,
    pub straight_length: f64,
    pub curved_length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisEntry {
    pub translation: char,
    pub rotation: char,
    #[serde(default = "default_steps_per_mm")]
    pub steps_per_mm: f64,
    #[serde(default = "default_steps_per_degree")]
    pub steps_per_degree: f64,
    #[serde(default)]
    pub offset: f64,
    #[serde(default = "default_translation_limits")]
    pub translation_limits: [f64; 2],
    #[serde(default = "default_rotation_limits")]
    pub rotation_limits: [f64; 2],
}

fn default_steps_per_mm() -> f64 {
    DEFAULT_STEPS_PER_MM
}
fn default_steps_per_degree() -> f64 {
    DEFAULT_STEPS_PER_DEGREE
}
fn default_translation_limits() -> [f64; 2] {
    DEFAULT_TRANSLATION_LIMITS
}
fn default_rotation_limits() -> [f64; 2] {
    DEFAULT_ROTATION_LIMITS
}

/// On-disk (and over-the-wire) form of a robot description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotDescriptionFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub tubes: Vec<TubeEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub axes: Vec<AxisEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joints: Option<JointConfig>,
}

/// A validated robot: tubes, axis assignment and initial joints.
#[derive(Debug, Clone, PartialEq)]
pub struct Robot {
    pub name: Option<String>,
    pub tubes: Vec<TubeSpec>,
    pub axis_map: AxisMap,
    pub joints: JointConfig,
}

impl RobotDescriptionFile {
    pub fn parse(text: &str) -> Result<Self, RobotFileError> {
        toml::from_str(text).map_err(|e| RobotFileError::Syntax(e.to_string()))
    }

    pub fn build(&self) -> Result<Robot, RobotFileError> {
        let tubes = self
            .tubes
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let tube = i + 1;
                let precurvature = match (t.precurvature, t.radius_of_curvature) {
                    (Some(_), Some(_)) => {
                        return Err(RobotFileError::Tube {
                            tube,
                            message: "give either precurvature or radius_of_curvature, not both".into(),
                        })
                    }
                    (Some(k), None) => k,
                    (None, Some(r)) if r > 0.0 => 1.0 / r,
                    (None, Some(r)) => {
                        return Err(RobotFileError::Tube {
                            tube,
                            message: format!("radius_of_curvature must be positive, got {r}"),
                        })
                    }
                    (None, None) => {
                        return Err(RobotFileError::Tube {
                            tube,
                            message: "missing precurvature or radius_of_curvature".into(),
                        })
                    }
                };
                Ok(TubeSpec::new(
                    tube as u32,
                    t.youngs_modulus,
                    t.outer_diameter,
                    t.inner_diameter,
                    precurvature,
                    t.straight_length,
                    t.curved_length,
                )?)
            })
            .collect::<Result<Vec<_>, _>>()?;
        validate_tube_set(&tubes)?;

        let axis_map = if self.axes.is_empty() {
            AxisMap::default_for(tubes.len())?
        } else {
            if self.axes.len() != tubes.len() {
                return Err(
                    GcodeError::Config(format!("{} axis entries for {} tubes", self.axes.len(), tubes.len())).into(),
                );
            }
            AxisMap::new(
                self.axes
                    .iter()
                    .enumerate()
                    .map(|(i, a)| AxisAssignment {
                        tube: i as u32 + 1,
                        translation: a.translation.to_ascii_uppercase(),
                        rotation: a.rotation.to_ascii_uppercase(),
                        steps_per_mm: a.steps_per_mm,
                        steps_per_degree: a.steps_per_degree,
                        offset: a.offset,
                        translation_limits: a.translation_limits,
                        rotation_limits: a.rotation_limits,
                    })
                    .collect(),
            )?
        };

        let joints = self.joints.clone().unwrap_or_else(|| axis_map.home_configuration());
        joints.validate(&tubes)?;

        Ok(Robot {
            name: self.name.clone(),
            tubes,
            axis_map,
            joints,
        })
    }
}

impl Robot {
    pub fn from_toml(text: &str) -> Result<Self, RobotFileError> {
        RobotDescriptionFile::parse(text)?.build()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RobotFileError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| RobotFileError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    /// Inverse of [`RobotDescriptionFile::build`].
    pub fn to_description(&self) -> RobotDescriptionFile {
        RobotDescriptionFile {
            name: self.name.clone(),
            tubes: self
                .tubes
                .iter()
                .map(|t| TubeEntry {
                    youngs_modulus: t.youngs_modulus,
                    outer_diameter: t.outer_diameter,
                    inner_diameter: t.inner_diameter,
                    precurvature: Some(t.precurvature),
                    radius_of_curvature: None,
                    straight_length: t.straight_length,
                    curved_length: t.curved_length,
                })
                .collect(),
            axes: self
                .axis_map
                .assignments()
                .iter()
                .map(|a| AxisEntry {
                    translation: a.translation,
                    rotation: a.rotation,
                    steps_per_mm: a.steps_per_mm,
                    steps_per_degree: a.steps_per_degree,
                    offset: a.offset,
                    translation_limits: a.translation_limits,
                    rotation_limits: a.rotation_limits,
                })
                .collect(),
            joints: Some(self.joints.clone()),
        }
    }
}

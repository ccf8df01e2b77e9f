use std::ops::Mul;

use nalgebra::{Matrix3, Matrix4, Point3, Vector3};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid_input, Result};

/// Below this value of `κℓ` the arc is evaluated through its Taylor expansion.
pub const STRAIGHT_THRESHOLD: f64 = 1e-7;

/// Rigid transform `T = [R p; 0 1]` between two frames. Translations in mm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self { rotation, translation }
    }

    /// Pure rotation of `angle_deg` about the z-axis.
    pub fn rot_z(angle_deg: f64) -> Self {
        let (s, c) = angle_deg.to_radians().sin_cos();
        Self::new(Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0), Vector3::zeros())
    }

    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    pub fn transform_point(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    /// Largest deviation of `RᵀR` from identity and of `det R` from one.
    pub fn orthonormality_error(&self) -> f64 {
        let gram = self.rotation.transpose() * self.rotation - Matrix3::identity();
        let det = (self.rotation.determinant() - 1.0).abs();
        gram.abs().max().max(det)
    }
}

impl Mul for Pose {
    type Output = Pose;

    fn mul(self, rhs: Pose) -> Pose {
        self.compose(&rhs)
    }
}

/// Transform from the base to the tip of one constant-curvature arc of length
/// `arc_length` (mm) and curvature `curvature` (1/mm) bending in the plane
/// rotated by `plane_angle_deg` about the base z-axis.
///
/// `R = Rz(φ)·Ry(κℓ)` and `p = Rz(φ)·[(1 − cos κℓ)/κ, 0, sin(κℓ)/κ]`.
pub fn link_pose(arc_length: f64, curvature: f64, plane_angle_deg: f64) -> Result<Pose> {
    if !arc_length.is_finite() || arc_length <= 0.0 {
        return Err(invalid_input(format!(
            "link arc length must be positive, got {arc_length}"
        )));
    }
    if !curvature.is_finite() || curvature < 0.0 {
        return Err(invalid_input(format!(
            "link curvature must be non-negative, got {curvature}"
        )));
    }
    Ok(arc_pose(arc_length, curvature, plane_angle_deg))
}

/// Unchecked variant of [`link_pose`] that also accepts `arc_length == 0`.
pub(crate) fn arc_pose(arc_length: f64, curvature: f64, plane_angle_deg: f64) -> Pose {
    let (sp, cp) = plane_angle_deg.to_radians().sin_cos();
    let theta = curvature * arc_length;
    let (st, ct) = theta.sin_cos();

    let rotation = Matrix3::new(
        cp * ct,
        -sp,
        cp * st, //
        sp * ct,
        cp,
        sp * st, //
        -st,
        0.0,
        ct,
    );

    // in-plane offsets: (1 - cos κℓ)/κ and sin(κℓ)/κ
    let (radial, axial) = if theta < STRAIGHT_THRESHOLD {
        let t2 = theta * theta;
        (arc_length * theta * (0.5 - t2 / 24.0), arc_length * (1.0 - t2 / 6.0))
    } else {
        let half = (0.5 * theta).sin();
        (2.0 * half * half / curvature, st / curvature)
    };

    Pose {
        rotation,
        translation: Vector3::new(cp * radial, sp * radial, axial),
    }
}

#[derive(Serialize, Deserialize)]
struct PoseRepr {
    rotation: [[f64; 3]; 3],
    translation: [f64; 3],
}

impl Serialize for Pose {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let r = &self.rotation;
        PoseRepr {
            rotation: [
                [r[(0, 0)], r[(0, 1)], r[(0, 2)]],
                [r[(1, 0)], r[(1, 1)], r[(1, 2)]],
                [r[(2, 0)], r[(2, 1)], r[(2, 2)]],
            ],
            translation: [self.translation.x, self.translation.y, self.translation.z],
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Pose {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = PoseRepr::deserialize(deserializer)?;
        let r = repr.rotation;
        Ok(Pose {
            rotation: Matrix3::new(
                r[0][0], r[0][1], r[0][2], r[1][0], r[1][1], r[1][2], r[2][0], r[2][1], r[2][2],
            ),
            translation: Vector3::from(repr.translation),
        })
    }
}

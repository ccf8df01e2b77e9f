use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use super::links::{partition_links, solve_link_mechanics, Link};
use super::pose::{arc_pose, Pose};
use super::tube::{JointConfig, TubeSpec};
use crate::error::{invalid_input, Result};

/// Result of a forward kinematics evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FkSolution {
    /// Base-to-tip transform.
    pub tip: Pose,
    pub links: Vec<Link>,
    /// Base-to-link-end transform for every link, base first.
    pub link_poses: Vec<Pose>,
}

/// One sampled centerline point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackbonePoint {
    /// Arc length from the front plate (mm).
    pub s: f64,
    pub point: [f64; 3],
}

impl BackbonePoint {
    pub fn position(&self) -> Point3<f64> {
        Point3::from(self.point)
    }
}

pub fn forward_kinematics(tubes: &[TubeSpec], joints: &JointConfig) -> Result<FkSolution> {
    let links = solve_link_mechanics(&partition_links(tubes, joints)?, tubes, joints)?;

    let mut current = Pose::identity();
    let link_poses = links
        .iter()
        .map(|link| {
            current = current * arc_pose(link.arc_length, link.curvature, link.plane_angle);
            current
        })
        .collect();

    Ok(FkSolution {
        tip: current,
        links,
        link_poses,
    })
}

impl FkSolution {
    /// Position on the centerline at arc length `s`, clamped to the deployed range.
    pub fn point_at(&self, s: f64) -> Point3<f64> {
        let mut base = Pose::identity();
        for (link, end_pose) in self.links.iter().zip(&self.link_poses) {
            if s < link.end() {
                let local = (s - link.start).max(0.0);
                let partial = arc_pose(local, link.curvature, link.plane_angle);
                return Point3::from(base.rotation * partial.translation + base.translation);
            }
            base = *end_pose;
        }
        Point3::from(self.tip.translation)
    }

    /// Total deployed arc length.
    pub fn length(&self) -> f64 {
        self.links.last().map_or(0.0, Link::end)
    }
}

/// Samples the centerline every `ds` mm from the plate to the tip. The tip is
/// always the last sample.
pub fn sample_backbone(tubes: &[TubeSpec], joints: &JointConfig, ds: f64) -> Result<Vec<BackbonePoint>> {
    if !ds.is_finite() || ds <= 0.0 {
        return Err(invalid_input(format!("sampling step must be positive, got {ds}")));
    }
    let fk = forward_kinematics(tubes, joints)?;
    Ok(fk.sample(ds))
}

impl FkSolution {
    pub(crate) fn sample(&self, ds: f64) -> Vec<BackbonePoint> {
        let length = self.length();
        let steps = (length / ds + 1e-9).floor() as usize;
        let mut samples: Vec<f64> = (0..=steps).map(|k| (k as f64 * ds).min(length)).collect();
        if length - samples[samples.len() - 1] > 1e-9 {
            samples.push(length);
        }

        // walk links once instead of searching per sample
        let mut out = Vec::with_capacity(samples.len());
        let mut index = 0;
        let mut base = Pose::identity();
        for s in samples {
            while index < self.links.len() && s >= self.links[index].end() && index + 1 < self.links.len() {
                base = self.link_poses[index];
                index += 1;
            }
            let position = match self.links.get(index) {
                Some(link) => {
                    let local = (s - link.start).clamp(0.0, link.arc_length);
                    let partial = arc_pose(local, link.curvature, link.plane_angle);
                    base.rotation * partial.translation + base.translation
                }
                None => Vector3::zeros(),
            };
            out.push(BackbonePoint {
                s,
                point: [position.x, position.y, position.z],
            });
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn tubes_straight() -> Vec<TubeSpec> {
        vec![
            TubeSpec::new(1, 50.0, 2.0, 1.6, 0.0, 100.0, 40.0).unwrap(),
            TubeSpec::new(2, 50.0, 1.5, 1.2, 0.0, 150.0, 60.0).unwrap(),
        ]
    }

    #[test]
    fn straight_robot_tip() {
        let fk = forward_kinematics(&tubes_straight(), &JointConfig::new(vec![100.0, 160.0], vec![0.0, 0.0])).unwrap();
        assert!((fk.tip.translation - Vector3::new(0.0, 0.0, 160.0)).norm() < 1e-12);
        assert!((fk.tip.rotation - nalgebra::Matrix3::identity()).abs().max() < 1e-15);
    }

    #[test]
    fn retracted_is_identity() {
        let fk = forward_kinematics(&tubes_straight(), &JointConfig::retracted(2)).unwrap();
        assert_eq!(fk.tip, Pose::identity());
        assert!(fk.links.is_empty() && fk.link_poses.is_empty());
        let samples = fk.sample(1.0);
        assert_eq!(samples.len(), 1);
        assert_eq!(samples[0].point, [0.0; 3]);
    }

    #[test]
    fn straight_then_quarter_arc() {
        let tubes = [TubeSpec::new(1, 50.0, 2.0, 1.6, PI / 80.0, 60.0, 40.0).unwrap()];
        let fk = forward_kinematics(&tubes, &JointConfig::new(vec![100.0], vec![0.0])).unwrap();
        let r = 80.0 / PI;
        assert!((fk.tip.translation - Vector3::new(r, 0.0, 60.0 + r)).norm() < 1e-9);
        assert!((fk.tip.translation.x - 25.4648).abs() < 1e-4);
        assert!((fk.tip.translation.z - 85.4648).abs() < 1e-4);
    }

    #[test]
    fn straight_samples() {
        let tubes = [TubeSpec::new(1, 50.0, 2.0, 1.6, 0.0, 60.0, 40.0).unwrap()];
        let pts = sample_backbone(&tubes, &JointConfig::new(vec![100.0], vec![0.0]), 10.0).unwrap();
        assert_eq!(pts.len(), 11);
        for (k, p) in pts.iter().enumerate() {
            assert!((p.point[2] - 10.0 * k as f64).abs() < 1e-12);
            assert_eq!((p.point[0], p.point[1]), (0.0, 0.0));
        }
    }

    #[test]
    fn samples_end_at_tip_and_respect_spacing() {
        let tubes = [TubeSpec::new(1, 50.0, 2.0, 1.6, 0.02, 60.0, 40.0).unwrap()];
        let joints = JointConfig::new(vec![97.0], vec![30.0]);
        let fk = forward_kinematics(&tubes, &joints).unwrap();
        let pts = fk.sample(7.0);
        assert_eq!(pts[0].point, [0.0; 3]);
        let last = pts.last().unwrap();
        assert_eq!(last.s, 97.0);
        assert!((last.position().coords - fk.tip.translation).norm() < 1e-12);
        for w in pts.windows(2) {
            assert!((w[1].position() - w[0].position()).norm() <= 7.0 + 1e-9);
        }
        for p in &pts {
            assert!((fk.point_at(p.s) - p.position()).norm() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_step() {
        let tubes = tubes_straight();
        let joints = JointConfig::new(vec![10.0, 20.0], vec![0.0, 0.0]);
        assert!(sample_backbone(&tubes, &joints, 0.0).is_err());
        assert!(sample_backbone(&tubes, &joints, -1.0).is_err());
    }
}

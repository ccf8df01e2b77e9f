use serde::{Deserialize, Serialize};

use super::equilibrium::{equilibrium_plane, normalize_degrees, SectionContribution};
use super::tube::{validate_tube_set, JointConfig, TubeSpec};
use crate::error::{KinematicsError, Result};

/// Transition points closer than this (mm) collapse into one link boundary.
pub const MERGE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Section {
    Straight,
    Curved,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LinkMember {
    pub tube: u32,
    pub section: Section,
}

/// A backbone segment over which the set of overlapping tube sections is
/// constant, modelled as a circular arc.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    /// Arc-length coordinate of the link base (mm from the front plate).
    pub start: f64,
    pub arc_length: f64,
    pub curvature: f64,
    /// Bending plane angle relative to the previous link (degrees).
    pub plane_angle: f64,
    /// Bending plane angle in the robot base frame (degrees).
    pub absolute_plane_angle: f64,
    /// Member tubes, outermost first.
    pub member_tubes: Vec<LinkMember>,
}

impl Link {
    pub fn end(&self) -> f64 {
        self.start + self.arc_length
    }
}

/// Section of every tube present at arc length `s`, outermost first.
fn signature_at(tubes: &[TubeSpec], joints: &JointConfig, s: f64) -> Vec<LinkMember> {
    tubes
        .iter()
        .zip(&joints.translations)
        .filter(|(_, &rho)| s < rho)
        .map(|(tube, &rho)| LinkMember {
            tube: tube.id,
            section: if s >= rho - tube.curved_length {
                Section::Curved
            } else {
                Section::Straight
            },
        })
        .collect()
}

/// Splits the deployed backbone into links. Curvature and plane angles are
/// left at zero; see [`solve_link_mechanics`].
pub fn partition_links(tubes: &[TubeSpec], joints: &JointConfig) -> Result<Vec<Link>> {
    validate_tube_set(tubes)?;
    joints.validate(tubes)?;

    let total = joints.max_translation();
    if total <= MERGE_TOLERANCE {
        return Ok(Vec::new());
    }

    let mut points: Vec<f64> = std::iter::once(0.0)
        .chain(
            tubes
                .iter()
                .zip(&joints.translations)
                .flat_map(|(tube, &rho)| [rho - tube.curved_length, rho]),
        )
        .map(|p| p.clamp(0.0, total))
        .collect();
    points.push(total);
    points.sort_by(f64::total_cmp);

    let mut boundaries: Vec<f64> = Vec::with_capacity(points.len());
    for p in points {
        match boundaries.last() {
            Some(&last) if p - last <= MERGE_TOLERANCE => {}
            _ => boundaries.push(p),
        }
    }
    // the final boundary must be the tip itself
    if let Some(last) = boundaries.last_mut() {
        *last = total;
    }

    let mut links: Vec<Link> = Vec::with_capacity(boundaries.len());
    for pair in boundaries.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let members = signature_at(tubes, joints, 0.5 * (a + b));
        match links.last_mut() {
            Some(prev) if prev.member_tubes == members => prev.arc_length = b - prev.start,
            _ => links.push(Link {
                start: a,
                arc_length: b - a,
                curvature: 0.0,
                plane_angle: 0.0,
                absolute_plane_angle: 0.0,
                member_tubes: members,
            }),
        }
    }
    Ok(links)
}

/// Fills curvature and plane angles of partitioned links from the
/// equilibrium of their member tube sections.
pub fn solve_link_mechanics(links: &[Link], tubes: &[TubeSpec], joints: &JointConfig) -> Result<Vec<Link>> {
    let mut previous_absolute = 0.0;
    links
        .iter()
        .map(|link| {
            let contributions = link
                .member_tubes
                .iter()
                .map(|member| {
                    let index = member.tube as usize - 1;
                    let tube = tubes.get(index).ok_or_else(|| {
                        KinematicsError::InvalidInput(format!("link references unknown tube {}", member.tube))
                    })?;
                    let precurvature = match member.section {
                        Section::Curved => tube.precurvature,
                        Section::Straight => 0.0,
                    };
                    Ok(SectionContribution::new(
                        tube.stiffness(),
                        precurvature,
                        joints.rotations[index],
                    ))
                })
                .collect::<Result<Vec<_>>>()?;

            let (curvature, absolute) = match equilibrium_plane(&contributions) {
                Ok(plane) => (plane.resultant_curvature, plane.phi),
                Err(KinematicsError::DegeneratePlane { .. }) => (0.0, previous_absolute),
                Err(e) => return Err(e),
            };
            let relative = normalize_degrees(absolute - previous_absolute);
            previous_absolute = absolute;
            Ok(Link {
                curvature,
                plane_angle: relative,
                absolute_plane_angle: absolute,
                ..link.clone()
            })
        })
        .collect()
}

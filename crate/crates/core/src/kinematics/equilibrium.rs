use serde::{Deserialize, Serialize};

use crate::error::{invalid_input, KinematicsError, Result};

/// Resultant curvatures at or below this fraction of the largest input
/// precurvature are treated as an exact cancellation.
const DEGENERATE_RELATIVE: f64 = 1e-12;

/// Stiffness `EI` and resting curvature of a tube section overlapping a link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionContribution {
    pub stiffness: f64,
    pub precurvature: f64,
    pub angle_deg: f64,
}

impl SectionContribution {
    pub fn new(stiffness: f64, precurvature: f64, angle_deg: f64) -> Self {
        Self {
            stiffness,
            precurvature,
            angle_deg,
        }
    }
}

/// Bending plane of a link whose member tubes are mutually rotated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumPlane {
    /// Curvature component along the base x direction (1/mm).
    pub chi: f64,
    /// Curvature component along the base y direction (1/mm).
    pub gamma: f64,
    /// Bending plane angle in degrees, in (−180, 180].
    pub phi: f64,
    pub resultant_curvature: f64,
}

fn check_stiffness(stiffness: f64) -> Result<()> {
    if stiffness > 0.0 && stiffness.is_finite() {
        Ok(())
    } else {
        Err(invalid_input(format!(
            "tube stiffness must be positive, got {stiffness}"
        )))
    }
}

fn check_precurvature(kappa: f64) -> Result<()> {
    if kappa >= 0.0 && kappa.is_finite() {
        Ok(())
    } else {
        Err(invalid_input(format!("precurvature must be non-negative, got {kappa}")))
    }
}

/// Stiffness-weighted mean curvature of tubes bending in a common plane.
///
/// Each entry is `(EᵢIᵢ, κᵢ)`; the result is `Σ EᵢIᵢκᵢ / Σ EᵢIᵢ`.
pub fn in_plane_curvature(tubes: &[(f64, f64)]) -> Result<f64> {
    if tubes.is_empty() {
        return Err(invalid_input("at least one tube is required"));
    }
    let mut weighted = 0.0;
    let mut total = 0.0;
    for &(stiffness, kappa) in tubes {
        check_stiffness(stiffness)?;
        check_precurvature(kappa)?;
        weighted += stiffness * kappa;
        total += stiffness;
    }
    let (lo, hi) = tubes
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, k)| {
            (lo.min(k), hi.max(k))
        });
    // rounding can push a weighted mean of equal values a hair outside the range
    Ok((weighted / total).clamp(lo, hi))
}

/// Wraps an angle in degrees into (−180, 180].
pub fn normalize_degrees(angle: f64) -> f64 {
    if angle > -180.0 && angle <= 180.0 {
        return angle;
    }
    let wrapped = angle.rem_euclid(360.0);
    if wrapped > 180.0 {
        wrapped - 360.0
    } else {
        wrapped
    }
}

/// Equilibrium bending plane of tubes rotated to different axial angles.
///
/// The plane angle is `atan2(γ, χ)`, so a lone tube bends in its own plane.
/// Fails with [`KinematicsError::DegeneratePlane`] when the curvature vectors
/// cancel.
pub fn equilibrium_plane(tubes: &[SectionContribution]) -> Result<EquilibriumPlane> {
    if tubes.is_empty() {
        return Err(invalid_input("at least one tube is required"));
    }
    let mut chi = 0.0;
    let mut gamma = 0.0;
    let mut total = 0.0;
    let mut largest = 0.0_f64;
    let mut weighted = 0.0;
    // angle shared by every bending tube, if there is one
    let mut common: Option<Option<f64>> = None;
    for t in tubes {
        check_stiffness(t.stiffness)?;
        check_precurvature(t.precurvature)?;
        if !t.angle_deg.is_finite() {
            return Err(invalid_input(format!("tube angle must be finite, got {}", t.angle_deg)));
        }
        let (s, c) = t.angle_deg.to_radians().sin_cos();
        let moment = t.stiffness * t.precurvature;
        chi += moment * c;
        gamma += moment * s;
        total += t.stiffness;
        weighted += moment;
        largest = largest.max(t.precurvature);
        if moment > 0.0 {
            let angle = normalize_degrees(t.angle_deg);
            common = match common {
                None => Some(Some(angle)),
                Some(Some(a)) if a == angle => Some(Some(a)),
                _ => Some(None),
            };
        }
    }
    chi /= total;
    gamma /= total;
    let resultant_curvature = chi.hypot(gamma);

    if resultant_curvature <= DEGENERATE_RELATIVE * largest || resultant_curvature == 0.0 {
        return Err(KinematicsError::DegeneratePlane {
            resultant_curvature: 0.0,
        });
    }

    // the trigonometric round trip is only accurate to a few ulps
    if let Some(Some(angle)) = common {
        return Ok(EquilibriumPlane {
            chi,
            gamma,
            phi: angle,
            resultant_curvature: weighted / total,
        });
    }
    Ok(EquilibriumPlane {
        chi,
        gamma,
        phi: normalize_degrees(gamma.atan2(chi).to_degrees()),
        resultant_curvature,
    })
}

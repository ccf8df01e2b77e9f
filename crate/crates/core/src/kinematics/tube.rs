use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid_config, invalid_input, Result};

/// One pre-curved tube: a straight transmission section followed by a
/// distal section with constant resting curvature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TubeSpec {
    /// 1 is the outermost tube.
    pub id: u32,
    /// Young's modulus in GPa.
    pub youngs_modulus: f64,
    pub outer_diameter: f64,
    pub inner_diameter: f64,
    /// Second moment of area of the annular section (mm⁴).
    pub second_moment: f64,
    /// Resting curvature of the distal section (1/mm).
    pub precurvature: f64,
    pub straight_length: f64,
    pub curved_length: f64,
}

impl TubeSpec {
    pub fn new(
        id: u32,
        youngs_modulus: f64,
        outer_diameter: f64,
        inner_diameter: f64,
        precurvature: f64,
        straight_length: f64,
        curved_length: f64,
    ) -> Result<Self> {
        let tube = Self {
            id,
            youngs_modulus,
            outer_diameter,
            inner_diameter,
            second_moment: annulus_second_moment(outer_diameter, inner_diameter),
            precurvature,
            straight_length,
            curved_length,
        };
        tube.validate()?;
        Ok(tube)
    }

    /// Bending stiffness `EI`.
    pub fn stiffness(&self) -> f64 {
        self.youngs_modulus * self.second_moment
    }

    pub fn total_length(&self) -> f64 {
        self.straight_length + self.curved_length
    }

    pub fn validate(&self) -> Result<()> {
        let id = self.id;
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.youngs_modulus) {
            return Err(invalid_input(format!("tube {id}: Young's modulus must be positive")));
        }
        if !(positive(self.inner_diameter) && self.outer_diameter > self.inner_diameter)
            || !self.outer_diameter.is_finite()
        {
            return Err(invalid_input(format!(
                "tube {id}: requires outer_diameter > inner_diameter > 0 (got {} / {})",
                self.outer_diameter, self.inner_diameter
            )));
        }
        let expected = annulus_second_moment(self.outer_diameter, self.inner_diameter);
        if ((self.second_moment - expected) / expected).abs() > 1e-12 {
            return Err(invalid_input(format!(
                "tube {id}: second moment {} does not match annulus value {expected}",
                self.second_moment
            )));
        }
        if !(self.precurvature >= 0.0 && self.precurvature.is_finite()) {
            return Err(invalid_input(format!("tube {id}: precurvature must be non-negative")));
        }
        if !positive(self.straight_length) {
            return Err(invalid_input(format!("tube {id}: straight length must be positive")));
        }
        if !(self.curved_length >= 0.0 && self.curved_length.is_finite()) {
            return Err(invalid_input(format!("tube {id}: curved length must be non-negative")));
        }
        if self.precurvature * self.curved_length >= 2.0 * PI {
            return Err(invalid_input(format!(
                "tube {id}: curved section subtends a full circle or more"
            )));
        }
        Ok(())
    }
}

/// `(π/64)(OD⁴ − ID⁴)`.
pub fn annulus_second_moment(outer_diameter: f64, inner_diameter: f64) -> f64 {
    PI / 64.0 * (outer_diameter.powi(4) - inner_diameter.powi(4))
}

/// Checks every tube and that the set nests: ids run 1..=n from the outside
/// in, and each tube fits inside its outer neighbour.
pub fn validate_tube_set(tubes: &[TubeSpec]) -> Result<()> {
    if tubes.is_empty() {
        return Err(invalid_input("a robot needs at least one tube"));
    }
    for (index, tube) in tubes.iter().enumerate() {
        tube.validate()?;
        if tube.id as usize != index + 1 {
            return Err(invalid_input(format!(
                "tube ids must run 1..={} from the outermost tube, found {} at position {}",
                tubes.len(),
                tube.id,
                index + 1
            )));
        }
    }
    for pair in tubes.windows(2) {
        let (outer, inner) = (&pair[0], &pair[1]);
        if outer.inner_diameter < inner.outer_diameter {
            return Err(invalid_input(format!(
                "tube {} (OD {}) does not fit inside tube {} (ID {})",
                inner.id, inner.outer_diameter, outer.id, outer.inner_diameter
            )));
        }
    }
    Ok(())
}

/// Per-tube deployed length (mm) and axial rotation (degrees).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointConfig {
    /// Length of tube i deployed beyond the front plate.
    pub translations: Vec<f64>,
    /// Axial angle of tube i's bending plane.
    pub rotations: Vec<f64>,
}

impl JointConfig {
    pub fn new(translations: Vec<f64>, rotations: Vec<f64>) -> Self {
        Self {
            translations,
            rotations,
        }
    }

    /// All tubes retracted to the plate, no rotation.
    pub fn retracted(tube_count: usize) -> Self {
        Self::new(vec![0.0; tube_count], vec![0.0; tube_count])
    }

    /// Every tube deployed to its full length, no rotation.
    pub fn fully_extended(tubes: &[TubeSpec]) -> Self {
        Self::new(
            tubes.iter().map(TubeSpec::total_length).collect(),
            vec![0.0; tubes.len()],
        )
    }

    pub fn len(&self) -> usize {
        self.translations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.translations.is_empty()
    }

    /// Deployed length of the innermost (longest) tube.
    pub fn max_translation(&self) -> f64 {
        self.translations.iter().copied().fold(0.0, f64::max)
    }

    pub fn validate(&self, tubes: &[TubeSpec]) -> Result<()> {
        let n = tubes.len();
        if self.translations.len() != n || self.rotations.len() != n {
            return Err(invalid_config(format!(
                "expected {n} translations and rotations, got {} and {}",
                self.translations.len(),
                self.rotations.len()
            )));
        }
        for (tube, (&rho, &theta)) in tubes.iter().zip(self.translations.iter().zip(&self.rotations)) {
            if !rho.is_finite() || !theta.is_finite() {
                return Err(invalid_config(format!("tube {}: joint values must be finite", tube.id)));
            }
            if rho < 0.0 {
                return Err(invalid_config(format!(
                    "tube {}: translation {rho} mm is negative",
                    tube.id
                )));
            }
            if rho > tube.total_length() {
                return Err(invalid_config(format!(
                    "tube {}: translation {rho} mm exceeds tube length {} mm",
                    tube.id,
                    tube.total_length()
                )));
            }
        }
        for (i, pair) in self.translations.windows(2).enumerate() {
            if pair[0] > pair[1] {
                return Err(invalid_config(format!(
                    "telescoping order violated: tube {} deployed {} mm beyond inner tube {} ({} mm)",
                    i + 1,
                    pair[0],
                    i + 2,
                    pair[1]
                )));
            }
        }
        Ok(())
    }
}

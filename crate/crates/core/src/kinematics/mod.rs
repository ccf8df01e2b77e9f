//! Constant-curvature kinematics of concentric tube robots.
//!
//! The deployed backbone is split into links wherever a tube ends or a tube
//! switches from its straight to its curved section. Each link bends with the
//! stiffness-weighted equilibrium of its member tubes and is chained to the
//! next through [`link_pose`]. Everything here is a pure function.

mod equilibrium;
mod fk;
mod links;
mod pose;
mod tube;

pub use equilibrium::{
    equilibrium_plane, in_plane_curvature, normalize_degrees, EquilibriumPlane, SectionContribution,
};
pub use fk::{forward_kinematics, sample_backbone, BackbonePoint, FkSolution};
pub use links::{partition_links, solve_link_mechanics, Link, LinkMember, Section, MERGE_TOLERANCE};
pub use pose::{link_pose, Pose, STRAIGHT_THRESHOLD};
pub use tube::{annulus_second_moment, validate_tube_set, JointConfig, TubeSpec};

use crate::error::{invalid_input, Result};

/// Builds the textbook `n`-tube layout that splits into `2n − 1` links.
///
/// The outermost tube deploys only its curved section. Every inner tube
/// leaves its outer neighbour partway along that neighbour's curved section,
/// so each curved section starts inside the previous one and runs past its
/// end. Tube dimensions shrink inward with 0.2 mm wall and 0.1 mm clearance.
pub fn canonical_configuration(n: usize) -> Result<(Vec<TubeSpec>, JointConfig)> {
    if n == 0 || n > 8 {
        return Err(invalid_input(format!(
            "canonical layouts exist for 1..=8 tubes, got {n}"
        )));
    }
    let curved = 40.0;
    let mut tubes = Vec::with_capacity(n);
    let mut translations = Vec::with_capacity(n);
    let mut od = 0.5 * n as f64 + 1.0;
    for i in 0..n {
        // tip of tube i sits 30 mm beyond tube i-1; its curve starts 10 mm before that tip
        let rho = curved + 30.0 * i as f64;
        tubes.push(TubeSpec::new(
            i as u32 + 1,
            50.0,
            od,
            od - 0.4,
            0.01 + 0.005 * i as f64,
            100.0 + 40.0 * i as f64,
            curved,
        )?);
        translations.push(rho);
        od -= 0.5;
    }
    Ok((tubes, JointConfig::new(translations, vec![0.0; n])))
}

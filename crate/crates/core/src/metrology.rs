//! Tracker-to-robot frame registration and the verification experiments that
//! compare predicted tip positions with measurements.

use std::io::{Read, Write};

use nalgebra::{Matrix3, Point3, Vector3, SVD};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::KinematicsError;
use crate::kinematics::{forward_kinematics, normalize_degrees, FkSolution, JointConfig, Pose, TubeSpec};

#[derive(Debug, Error)]
pub enum MetrologyError {
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("no frame registration available")]
    MissingRegistration,

    #[error("invalid experiment: {0}")]
    InvalidExperiment(String),

    #[error(transparent)]
    Kinematics(#[from] KinematicsError),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = MetrologyError> = std::result::Result<T, E>;

/// Corresponding observations of one landmark.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointPair {
    pub tracker: [f64; 3],
    pub base: [f64; 3],
}

impl PointPair {
    pub fn new(tracker: [f64; 3], base: [f64; 3]) -> Self {
        Self { tracker, base }
    }
}

/// Rigid transform taking tracker coordinates into the robot base frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRegistration {
    pub tracker_to_base: Pose,
    /// Root-mean-square residual of the fitted pairs (mm).
    pub fit_rmse: f64,
    pub pairs: Vec<PointPair>,
}

impl FrameRegistration {
    pub fn to_base(&self, tracker_point: [f64; 3]) -> [f64; 3] {
        let p = self.tracker_to_base.transform_point(&Point3::from(tracker_point));
        [p.x, p.y, p.z]
    }

    pub fn to_tracker(&self, base_point: [f64; 3]) -> [f64; 3] {
        let p = self
            .tracker_to_base
            .inverse()
            .transform_point(&Point3::from(base_point));
        [p.x, p.y, p.z]
    }
}

fn centroid(points: &[Vector3<f64>]) -> Vector3<f64> {
    points.iter().sum::<Vector3<f64>>() / points.len() as f64
}

/// Second-largest scatter eigenvalue relative to the largest; zero for
/// collinear points.
fn spread_ratio(centered: &[Vector3<f64>]) -> f64 {
    let scatter: Matrix3<f64> = centered.iter().map(|v| v * v.transpose()).sum();
    let mut eig = scatter.symmetric_eigenvalues();
    eig.as_mut_slice().sort_by(|a, b| b.total_cmp(a));
    if eig[0] <= 0.0 {
        0.0
    } else {
        eig[1].max(0.0) / eig[0]
    }
}

/// Least-squares rigid fit `base ≈ R·tracker + t` over at least three
/// non-collinear pairs.
pub fn register_frames(pairs: &[PointPair]) -> Result<FrameRegistration> {
    if pairs.len() < 3 {
        return Err(MetrologyError::DegenerateGeometry(format!(
            "need at least 3 point pairs, got {}",
            pairs.len()
        )));
    }
    if pairs
        .iter()
        .any(|p| p.tracker.iter().chain(&p.base).any(|v| !v.is_finite()))
    {
        return Err(MetrologyError::DegenerateGeometry("non-finite coordinate".into()));
    }
    let q: Vec<Vector3<f64>> = pairs.iter().map(|p| Vector3::from(p.tracker)).collect();
    let p: Vec<Vector3<f64>> = pairs.iter().map(|p| Vector3::from(p.base)).collect();
    let (qc, pc) = (centroid(&q), centroid(&p));
    let q0: Vec<_> = q.iter().map(|v| v - qc).collect();
    let p0: Vec<_> = p.iter().map(|v| v - pc).collect();

    for (label, pts) in [("tracker", &q0), ("base", &p0)] {
        if spread_ratio(pts) < 1e-12 {
            return Err(MetrologyError::DegenerateGeometry(format!(
                "{label} points are collinear"
            )));
        }
    }

    let cross: Matrix3<f64> = q0.iter().zip(&p0).map(|(a, b)| b * a.transpose()).sum();
    let svd = SVD::new(cross, true, true);
    let (u, v_t) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
    let d = (u * v_t).determinant().signum();
    let rotation = u * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d)) * v_t;
    let translation = pc - rotation * qc;
    let tracker_to_base = Pose::new(rotation, translation);

    let fit_rmse = (q
        .iter()
        .zip(&p)
        .map(|(a, b)| (rotation * a + translation - b).norm_squared())
        .sum::<f64>()
        / pairs.len() as f64)
        .sqrt();

    Ok(FrameRegistration {
        tracker_to_base,
        fit_rmse,
        pairs: pairs.to_vec(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    InPlane,
    OutOfPlane,
    Tracking,
}

/// Tip coordinates within the common bending plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InPlaneDetail {
    /// Shared tube angle (degrees).
    pub plane_angle: f64,
    /// `(r, z)` of the tip before and after, `r` along the bending direction.
    pub tips_in_plane: [[f64; 2]; 2],
    /// Largest distance of any backbone point from the bending plane (mm).
    pub coplanarity_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutOfPlaneDetail {
    pub tube: u32,
    /// Absolute plane angle of the most distal link containing `tube`.
    pub distal_angle_before: f64,
    pub distal_angle_after: f64,
    /// Signed shortest-arc change in degrees.
    pub angle_change: f64,
}

/// Predicted tips, optional measurements and their discrepancies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub kind: ExperimentKind,
    pub before: JointConfig,
    pub after: JointConfig,
    /// Predicted tip positions in the base frame (before, after).
    pub predicted: Vec<[f64; 3]>,
    /// Measured tips in the base frame, one per prediction when present.
    pub measured: Vec<[f64; 3]>,
    /// `measured − predicted`.
    pub errors: Vec<[f64; 3]>,
    pub error_norms: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub in_plane: Option<InPlaneDetail>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_of_plane: Option<OutOfPlaneDetail>,
}

fn to_array(v: &Vector3<f64>) -> [f64; 3] {
    [v.x, v.y, v.z]
}

impl ExperimentRecord {
    fn new(kind: ExperimentKind, before: JointConfig, after: JointConfig, predicted: Vec<[f64; 3]>) -> Self {
        Self {
            kind,
            before,
            after,
            predicted,
            measured: Vec::new(),
            errors: Vec::new(),
            error_norms: Vec::new(),
            in_plane: None,
            out_of_plane: None,
        }
    }

    /// Attaches base-frame measurements, one per predicted tip.
    pub fn with_measurements(mut self, measured: Vec<[f64; 3]>) -> Result<Self> {
        if measured.len() != self.predicted.len() {
            return Err(MetrologyError::InvalidExperiment(format!(
                "{} measurements for {} predictions",
                measured.len(),
                self.predicted.len()
            )));
        }
        self.errors = measured
            .iter()
            .zip(&self.predicted)
            .map(|(m, p)| to_array(&(Vector3::from(*m) - Vector3::from(*p))))
            .collect();
        self.error_norms = self.errors.iter().map(|e| Vector3::from(*e).norm()).collect();
        self.measured = measured;
        Ok(self)
    }

    /// Predicted tip displacement `after − before`.
    pub fn displacement(&self) -> Option<[f64; 3]> {
        match self.predicted.as_slice() {
            [a, b] => Some(to_array(&(Vector3::from(*b) - Vector3::from(*a)))),
            _ => None,
        }
    }

    /// One CSV row per predicted tip.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "label",
            "predicted_x",
            "predicted_y",
            "predicted_z",
            "measured_x",
            "measured_y",
            "measured_z",
            "error_x",
            "error_y",
            "error_z",
            "error_norm",
        ])?;
        let labels: &[&str] = if self.predicted.len() == 2 {
            &["before", "after"]
        } else {
            &["tip"]
        };
        for (i, p) in self.predicted.iter().enumerate() {
            let mut row = vec![labels.get(i).copied().unwrap_or("tip").to_owned()];
            row.extend(p.iter().map(f64::to_string));
            let blank = || vec![String::new(); 3];
            row.extend(
                self.measured
                    .get(i)
                    .map_or_else(blank, |m| m.iter().map(f64::to_string).collect()),
            );
            row.extend(
                self.errors
                    .get(i)
                    .map_or_else(blank, |e| e.iter().map(f64::to_string).collect()),
            );
            row.push(self.error_norms.get(i).map_or_else(String::new, f64::to_string));
            w.write_record(&row)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// One row of a measured-points CSV (`frame_label,x,y,z`, header required).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasuredPoint {
    pub frame_label: String,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl MeasuredPoint {
    pub fn position(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

pub fn read_measured_points<R: Read>(reader: R) -> Result<Vec<MeasuredPoint>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = r.headers()?.clone();
    let expected = ["frame_label", "x", "y", "z"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(MetrologyError::InvalidExperiment(format!(
            "measured-point CSV needs header `{}`, found `{}`",
            expected.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    Ok(r.deserialize()
        .collect::<std::result::Result<Vec<MeasuredPoint>, _>>()?)
}

pub fn write_measured_points<W: Write>(writer: W, points: &[MeasuredPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for p in points {
        w.serialize(p)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Pairs tracker and base points that share a frame label, in the order of
/// `tracker`.
pub fn pair_by_label(tracker: &[MeasuredPoint], base: &[MeasuredPoint]) -> Result<Vec<PointPair>> {
    tracker
        .iter()
        .map(|t| {
            base.iter()
                .find(|b| b.frame_label == t.frame_label)
                .map(|b| PointPair::new(t.position(), b.position()))
                .ok_or_else(|| MetrologyError::InvalidExperiment(format!("no base point labelled `{}`", t.frame_label)))
        })
        .collect()
}

fn tip(fk: &FkSolution) -> [f64; 3] {
    to_array(&fk.tip.translation)
}

/// Largest distance of the sampled backbone from the plane through the
/// z-axis at `plane_angle` degrees.
pub fn coplanarity_residual(fk: &FkSolution, plane_angle: f64, ds: f64) -> f64 {
    let (s, c) = plane_angle.to_radians().sin_cos();
    fk.sample(ds)
        .iter()
        .map(|p| (-s * p.point[0] + c * p.point[1]).abs())
        .fold(0.0, f64::max)
}

/// Translates the innermost tube by `delta_translation` with every tube at
/// the same angle, so the whole backbone stays in one plane.
pub fn in_plane_experiment(
    tubes: &[TubeSpec],
    joints: &JointConfig,
    delta_translation: f64,
) -> Result<ExperimentRecord> {
    let theta = *joints
        .rotations
        .first()
        .ok_or_else(|| MetrologyError::InvalidExperiment("robot has no tubes".into()))?;
    if joints
        .rotations
        .iter()
        .any(|&t| normalize_degrees(t - theta).abs() > 1e-12)
    {
        return Err(MetrologyError::InvalidExperiment(
            "in-plane experiment requires all tubes at the same angle".into(),
        ));
    }
    let mut after = joints.clone();
    if let Some(last) = after.translations.last_mut() {
        *last += delta_translation;
    }
    let fk_before = forward_kinematics(tubes, joints)?;
    let fk_after = forward_kinematics(tubes, &after)?;

    let (s, c) = theta.to_radians().sin_cos();
    let in_plane = |p: [f64; 3]| [c * p[0] + s * p[1], p[2]];
    let (tb, ta) = (tip(&fk_before), tip(&fk_after));
    let residual = coplanarity_residual(&fk_before, theta, 1.0).max(coplanarity_residual(&fk_after, theta, 1.0));

    let mut record = ExperimentRecord::new(ExperimentKind::InPlane, joints.clone(), after, vec![tb, ta]);
    record.in_plane = Some(InPlaneDetail {
        plane_angle: normalize_degrees(theta),
        tips_in_plane: [in_plane(tb), in_plane(ta)],
        coplanarity_residual: residual,
    });
    Ok(record)
}

fn distal_angle(fk: &FkSolution, tube: u32) -> Option<f64> {
    fk.links
        .iter()
        .rev()
        .find(|l| l.member_tubes.iter().any(|m| m.tube == tube))
        .map(|l| l.absolute_plane_angle)
}

/// Rotates tube `tube` (1 = outermost) by `delta_rotation` degrees and records
/// how the tip and the bending plane of its most distal link move.
pub fn out_of_plane_experiment(
    tubes: &[TubeSpec],
    joints: &JointConfig,
    tube: u32,
    delta_rotation: f64,
) -> Result<ExperimentRecord> {
    let index = (tube as usize)
        .checked_sub(1)
        .filter(|&i| i < joints.rotations.len())
        .ok_or_else(|| MetrologyError::InvalidExperiment(format!("no tube {tube}")))?;
    let mut after = joints.clone();
    after.rotations[index] += delta_rotation;
    let fk_before = forward_kinematics(tubes, joints)?;
    let fk_after = forward_kinematics(tubes, &after)?;

    let distal_angle_before = distal_angle(&fk_before, tube).unwrap_or(0.0);
    let distal_angle_after = distal_angle(&fk_after, tube).unwrap_or(0.0);
    let mut record = ExperimentRecord::new(
        ExperimentKind::OutOfPlane,
        joints.clone(),
        after,
        vec![tip(&fk_before), tip(&fk_after)],
    );
    record.out_of_plane = Some(OutOfPlaneDetail {
        tube,
        distal_angle_before,
        distal_angle_after,
        angle_change: normalize_degrees(distal_angle_after - distal_angle_before),
    });
    Ok(record)
}

/// Compares a tracker-frame tip measurement with the predicted tip.
pub fn tip_tracking_comparison(
    tubes: &[TubeSpec],
    joints: &JointConfig,
    registration: Option<&FrameRegistration>,
    measured_tip_tracker_frame: [f64; 3],
) -> Result<ExperimentRecord> {
    let registration = registration.ok_or(MetrologyError::MissingRegistration)?;
    let fk = forward_kinematics(tubes, joints)?;
    let measured = registration.to_base(measured_tip_tracker_frame);
    ExperimentRecord::new(ExperimentKind::Tracking, joints.clone(), joints.clone(), vec![tip(&fk)])
        .with_measurements(vec![measured])
}

/// Summary of a simulated tracking session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackingSession {
    pub registration: FrameRegistration,
    pub records: Vec<ExperimentRecord>,
    pub mean_error: f64,
    pub max_error: f64,
}

/// Simulates the full tracking workflow: registers a tracker placed at
/// `tracker_to_base⁻¹` from eight noisy fiducials, then drives the robot to
/// `n_poses` random configurations and compares noisy tracker readings of
/// the tip with the predicted tips.
pub fn simulate_tracking_session(
    tubes: &[TubeSpec],
    tracker_to_base: &Pose,
    n_poses: usize,
    sigma: f64,
    seed: u64,
) -> Result<TrackingSession> {
    if n_poses == 0 || sigma.is_nan() || sigma < 0.0 {
        return Err(MetrologyError::InvalidExperiment(
            "need n_poses ≥ 1 and sigma ≥ 0".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma.max(f64::MIN_POSITIVE)).expect("finite sigma");
    let noise = |rng: &mut ChaCha8Rng| {
        if sigma == 0.0 {
            Vector3::zeros()
        } else {
            Vector3::new(normal.sample(rng), normal.sample(rng), normal.sample(rng))
        }
    };
    let base_to_tracker = tracker_to_base.inverse();

    // fiducials at the corners of a box enclosing the workspace
    let landmarks: Vec<[f64; 3]> = (0..8)
        .map(|i| {
            let pick = |bit: usize, lo: f64, hi: f64| if i >> bit & 1 == 0 { lo } else { hi };
            [pick(0, -80.0, 80.0), pick(1, -80.0, 80.0), pick(2, 0.0, 260.0)]
        })
        .collect();
    let pairs: Vec<PointPair> = landmarks
        .iter()
        .map(|&b| {
            let t = base_to_tracker.transform_point(&Point3::from(b)).coords + noise(&mut rng);
            PointPair::new(to_array(&t), b)
        })
        .collect();
    let registration = register_frames(&pairs)?;

    let n = tubes.len();
    let mut records = Vec::with_capacity(n_poses);
    for _ in 0..n_poses {
        // random telescoping configuration
        let mut translations = Vec::with_capacity(n);
        let mut floor: f64 = 0.0;
        for tube in tubes {
            let hi = tube.total_length();
            let rho = if hi > floor { rng.random_range(floor..=hi) } else { hi };
            translations.push(rho);
            floor = floor.max(rho);
        }
        let rotations = (0..n).map(|_| rng.random_range(-180.0..180.0)).collect();
        let joints = JointConfig::new(translations, rotations);
        if joints.validate(tubes).is_err() {
            continue;
        }
        let fk = forward_kinematics(tubes, &joints)?;
        let reading = base_to_tracker
            .transform_point(&Point3::from(fk.tip.translation))
            .coords
            + noise(&mut rng);
        records.push(tip_tracking_comparison(
            tubes,
            &joints,
            Some(&registration),
            to_array(&reading),
        )?);
    }
    let norms: Vec<f64> = records.iter().flat_map(|r| r.error_norms.iter().copied()).collect();
    let mean_error = norms.iter().sum::<f64>() / norms.len().max(1) as f64;
    let max_error = norms.iter().copied().fold(0.0, f64::max);
    Ok(TrackingSession {
        registration,
        records,
        mean_error,
        max_error,
    })
}

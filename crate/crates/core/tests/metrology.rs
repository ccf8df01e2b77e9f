mod common;

use ctr_core::kinematics::{forward_kinematics, normalize_degrees, JointConfig, Pose, TubeSpec};
use ctr_core::metrology::{
    in_plane_experiment, out_of_plane_experiment, register_frames, simulate_tracking_session, tip_tracking_comparison,
    MetrologyError, PointPair,
};
use nalgebra::{Point3, Rotation3, Vector3};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

fn canonical_pair() -> Vec<TubeSpec> {
    vec![
        TubeSpec::new(1, 50.0, 2.0, 1.6, 0.01, 100.0, 40.0).unwrap(),
        TubeSpec::new(2, 50.0, 1.5, 1.2, 0.015, 200.0, 60.0).unwrap(),
    ]
}

fn pose(rotation: Rotation3<f64>, t: [f64; 3]) -> Pose {
    Pose::new(*rotation.matrix(), Vector3::from(t))
}

fn pairs_from(tracker_to_base: &Pose, base_points: &[[f64; 3]]) -> Vec<PointPair> {
    let inv = tracker_to_base.inverse();
    base_points
        .iter()
        .map(|&b| {
            let t = inv.transform_point(&Point3::from(b));
            PointPair::new([t.x, t.y, t.z], b)
        })
        .collect()
}

fn rotation_angle_deg(a: &Pose, b: &Pose) -> f64 {
    let r = a.rotation.transpose() * b.rotation;
    ((r.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos().to_degrees()
}

const LANDMARKS: [[f64; 3]; 6] = [
    [0.0, 0.0, 0.0],
    [50.0, 0.0, 0.0],
    [0.0, 50.0, 0.0],
    [0.0, 0.0, 50.0],
    [30.0, -20.0, 10.0],
    [-15.0, 35.0, 45.0],
];

#[test]
fn registration_recovers_exact_transform() {
    let truth = pose(
        Rotation3::from_axis_angle(&Vector3::z_axis(), 30f64.to_radians()),
        [1.0, 2.0, 3.0],
    );
    let reg = register_frames(&pairs_from(&truth, &LANDMARKS)).unwrap();
    assert!((reg.tracker_to_base.rotation - truth.rotation).abs().max() < 1e-9);
    assert!((reg.tracker_to_base.translation - truth.translation).norm() < 1e-9);
    assert!(reg.fit_rmse < 1e-9);
    let back = reg.to_tracker(reg.to_base([7.0, -3.0, 11.0]));
    assert!(common::dist(back, [7.0, -3.0, 11.0]) < 1e-9);
}

#[test]
fn registration_ignores_pair_order() {
    let truth = pose(Rotation3::from_euler_angles(0.4, -1.1, 2.5), [-80.0, 15.0, 210.0]);
    let pairs = pairs_from(&truth, &LANDMARKS);
    let reference = register_frames(&pairs).unwrap();
    let mut rng = common::rng(11);
    for _ in 0..20 {
        let mut shuffled = pairs.clone();
        shuffled.shuffle(&mut rng);
        let reg = register_frames(&shuffled).unwrap();
        assert!(
            (reg.tracker_to_base.rotation - reference.tracker_to_base.rotation)
                .abs()
                .max()
                < 1e-9
        );
        assert!((reg.tracker_to_base.translation - reference.tracker_to_base.translation).norm() < 1e-9);
    }
}

#[test]
fn noisy_registration_stays_close() {
    let truth = pose(Rotation3::from_euler_angles(0.2, 0.3, -0.9), [120.0, -40.0, 250.0]);
    let mut rng = common::rng(5);
    let normal = Normal::new(0.0, 0.1).unwrap();
    let base: Vec<[f64; 3]> = (0..10)
        .map(|_| {
            [
                rng.random_range(-60.0..60.0),
                rng.random_range(-60.0..60.0),
                rng.random_range(0.0..120.0),
            ]
        })
        .collect();
    let mut pairs = pairs_from(&truth, &base);
    for p in &mut pairs {
        for v in &mut p.tracker {
            *v += normal.sample(&mut rng);
        }
    }
    let reg = register_frames(&pairs).unwrap();
    assert!((0.05..=0.2).contains(&reg.fit_rmse), "fit rmse {}", reg.fit_rmse);
    assert!(rotation_angle_deg(&reg.tracker_to_base, &truth) < 0.5);
    assert!((reg.tracker_to_base.translation - truth.translation).norm() < 0.2);
}

#[test]
fn degenerate_landmarks_are_rejected() {
    let truth = Pose::identity();
    let collinear: Vec<[f64; 3]> = (0..5).map(|i| [i as f64 * 10.0, i as f64 * 5.0, 0.0]).collect();
    assert!(matches!(
        register_frames(&pairs_from(&truth, &collinear)),
        Err(MetrologyError::DegenerateGeometry(_))
    ));
    assert!(register_frames(&pairs_from(&truth, &LANDMARKS[..2])).is_err());
}

#[test]
fn in_plane_zero_step_leaves_tip() {
    let tubes = canonical_pair();
    let joints = JointConfig::new(vec![100.0, 160.0], vec![25.0, 25.0]);
    let record = in_plane_experiment(&tubes, &joints, 0.0).unwrap();
    assert_eq!(record.predicted[0], record.predicted[1]);
    assert_eq!(record.displacement().unwrap(), [0.0; 3]);
}

#[test]
fn in_plane_straight_robot_rises_exactly() {
    let tubes = [
        TubeSpec::new(1, 50.0, 2.0, 1.6, 0.0, 80.0, 20.0).unwrap(),
        TubeSpec::new(2, 50.0, 1.5, 1.2, 0.0, 120.0, 30.0).unwrap(),
    ];
    let joints = JointConfig::new(vec![100.0, 130.0], vec![-60.0, -60.0]);
    let record = in_plane_experiment(&tubes, &joints, 10.0).unwrap();
    assert_eq!(record.displacement().unwrap(), [0.0, 0.0, 10.0]);
}

#[test]
fn in_plane_displacement_matches_integration() {
    let tubes = canonical_pair();
    for theta in [0.0, 40.0, -135.0] {
        let joints = JointConfig::new(vec![100.0, 160.0], vec![theta, theta]);
        let record = in_plane_experiment(&tubes, &joints, 10.0).unwrap();
        let before = common::oracle_tip(&tubes, &joints, 100_000);
        let after = common::oracle_tip(&tubes, &record.after, 100_000);
        let expected = [after[0] - before[0], after[1] - before[1], after[2] - before[2]];
        assert!(common::dist(record.displacement().unwrap(), expected) < 1e-6);
        let detail = record.in_plane.unwrap();
        assert!(detail.coplanarity_residual < 1e-9);
        assert_eq!(detail.plane_angle, normalize_degrees(theta));
    }
}

#[test]
fn out_of_plane_zero_rotation_is_a_no_op() {
    let tubes = canonical_pair();
    let joints = JointConfig::new(vec![100.0, 160.0], vec![10.0, 70.0]);
    let record = out_of_plane_experiment(&tubes, &joints, 2, 0.0).unwrap();
    assert_eq!(record.predicted[0], record.predicted[1]);
    assert_eq!(record.out_of_plane.unwrap().angle_change, 0.0);
}

#[test]
fn out_of_plane_single_tube_turns_with_its_tube() {
    let tubes = [TubeSpec::new(1, 50.0, 2.0, 1.6, 0.01, 60.0, 50.0).unwrap()];
    let joints = JointConfig::new(vec![100.0], vec![0.0]);
    let record = out_of_plane_experiment(&tubes, &joints, 1, 90.0).unwrap();
    let detail = record.out_of_plane.unwrap();
    assert!((detail.angle_change - 90.0).abs() < 1e-12);
    let [b, a] = [record.predicted[0], record.predicted[1]];
    assert!((a[0]).abs() < 1e-12 && (a[1] - b[0]).abs() < 1e-12 && (a[2] - b[2]).abs() < 1e-12);
}

/// Two tubes with equal stiffness and curvature whose curved sections overlap
/// over the whole distal link.
fn matched_pair() -> Vec<TubeSpec> {
    let outer = TubeSpec::new(1, 50.0, 2.0, 1.6, 0.02, 60.0, 40.0).unwrap();
    let e = 50.0 * outer.second_moment / ctr_core::kinematics::annulus_second_moment(1.5, 1.2);
    vec![outer, TubeSpec::new(2, e, 1.5, 1.2, 0.02, 60.0, 40.0).unwrap()]
}

#[test]
fn out_of_plane_equal_tubes_split_the_difference() {
    let tubes = matched_pair();
    assert!((tubes[0].stiffness() - tubes[1].stiffness()).abs() < 1e-9 * tubes[0].stiffness());
    let joints = JointConfig::new(vec![100.0, 100.0], vec![0.0, 0.0]);
    let record = out_of_plane_experiment(&tubes, &joints, 1, 90.0).unwrap();
    let detail = record.out_of_plane.unwrap();
    assert!((detail.distal_angle_before).abs() < 1e-12);
    assert!(
        (detail.distal_angle_after - 45.0).abs() < 1e-9,
        "{}",
        detail.distal_angle_after
    );
}

#[test]
fn out_of_plane_follows_shortest_arc_mean() {
    let tubes = matched_pair();
    for a in (-150..=150).step_by(30) {
        for gap in [-170.0, -120.0, -45.0, 10.0, 90.0, 175.0] {
            let a = a as f64;
            let joints = JointConfig::new(vec![100.0, 100.0], vec![a, a]);
            let record = out_of_plane_experiment(&tubes, &joints, 2, gap).unwrap();
            let detail = record.out_of_plane.unwrap();
            let expected = normalize_degrees(a + gap / 2.0);
            assert!(
                normalize_degrees(detail.distal_angle_after - expected).abs() < 1e-9,
                "a={a} gap={gap}: {} vs {expected}",
                detail.distal_angle_after
            );
        }
    }
}

#[test]
fn tracking_reports_offset_magnitude() {
    let tubes = canonical_pair();
    let joints = JointConfig::new(vec![100.0, 160.0], vec![0.0, 30.0]);
    let truth = pose(
        Rotation3::from_axis_angle(&Vector3::x_axis(), 0.7),
        [10.0, 20.0, -300.0],
    );
    let reg = register_frames(&pairs_from(&truth, &LANDMARKS)).unwrap();
    let tip = forward_kinematics(&tubes, &joints).unwrap().tip.translation;
    let shifted = reg.to_tracker([tip.x + 0.1, tip.y, tip.z]);
    let record = tip_tracking_comparison(&tubes, &joints, Some(&reg), shifted).unwrap();
    assert!((record.error_norms[0] - 0.1).abs() < 1e-9);
    assert!((record.errors[0][0] - 0.1).abs() < 1e-9);

    assert!(matches!(
        tip_tracking_comparison(&tubes, &joints, None, shifted),
        Err(MetrologyError::MissingRegistration)
    ));
}

#[test]
fn simulated_tracking_error_matches_noise() {
    let tubes = canonical_pair();
    let tracker = pose(Rotation3::from_euler_angles(0.3, -0.5, 2.2), [120.0, -40.0, 250.0]);
    let session = simulate_tracking_session(&tubes, &tracker, 90, 0.1, 2024).unwrap();
    assert_eq!(session.records.len(), 90);
    assert!(
        (0.05..=0.3).contains(&session.mean_error),
        "mean {}",
        session.mean_error
    );

    let exact = simulate_tracking_session(&tubes, &tracker, 20, 0.0, 1).unwrap();
    assert!(exact.max_error < 1e-9);
}

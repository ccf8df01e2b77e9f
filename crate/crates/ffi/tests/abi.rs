use std::ffi::{CStr, CString};
use std::ptr;

use ctr_core::kinematics::{forward_kinematics, sample_backbone};
use ctr_core::Robot;
use ctr_ffi::*;

const CANONICAL: &str = include_str!("../../core/examples/robots/canonical2.robot");

struct Owned(*mut CtrRobot);

impl Drop for Owned {
    fn drop(&mut self) {
        unsafe { ctr_robot_free(self.0) }
    }
}

fn robot() -> Owned {
    let text = CString::new(CANONICAL).unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { ctr_robot_from_toml(text.as_ptr(), &mut out) }, CtrStatus::Ok);
    assert!(!out.is_null());
    Owned(out)
}

fn last_error() -> String {
    let p = ctr_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

unsafe fn take_string(p: *mut std::ffi::c_char) -> String {
    let s = CStr::from_ptr(p).to_str().unwrap().to_owned();
    ctr_string_free(p);
    s
}

#[test]
fn robot_handle_lifecycle() {
    let r = robot();
    let mut n = 0;
    assert_eq!(unsafe { ctr_robot_tube_count(r.0, &mut n) }, CtrStatus::Ok);
    assert_eq!(n, 2);
    let (mut t, mut a) = ([0.0; 2], [0.0; 2]);
    assert_eq!(
        unsafe { ctr_robot_initial_joints(r.0, t.as_mut_ptr(), a.as_mut_ptr(), 2) },
        CtrStatus::Ok
    );
    assert_eq!((t, a), ([100.0, 160.0], [0.0, 0.0]));
    assert!(ctr_last_error_message().is_null());

    assert_eq!(
        unsafe { ctr_robot_initial_joints(r.0, t.as_mut_ptr(), a.as_mut_ptr(), 3) },
        CtrStatus::InvalidConfiguration
    );
    unsafe {
        ctr_robot_free(ptr::null_mut());
        ctr_string_free(ptr::null_mut());
    }
    let version = unsafe { CStr::from_ptr(ctr_version()) }.to_str().unwrap();
    assert_eq!(version, env!("CARGO_PKG_VERSION"));
}

#[test]
fn bad_descriptions_report_codes() {
    let mut out = ptr::null_mut();
    let garbage = CString::new("[[tubes]\n").unwrap();
    assert_eq!(
        unsafe { ctr_robot_from_toml(garbage.as_ptr(), &mut out) },
        CtrStatus::ParseError
    );
    assert!(out.is_null());
    assert!(last_error().contains("malformed"));

    let invalid = CString::new(CANONICAL.replace("inner_diameter = 1.6", "inner_diameter = 2.6")).unwrap();
    assert_eq!(
        unsafe { ctr_robot_from_toml(invalid.as_ptr(), &mut out) },
        CtrStatus::InvalidConfiguration
    );

    assert_eq!(
        unsafe { ctr_robot_from_toml(ptr::null(), &mut out) },
        CtrStatus::NullPointer
    );
    let bad_utf8 = [0xffu8, 0xfe, 0];
    assert_eq!(
        unsafe { ctr_robot_from_toml(bad_utf8.as_ptr().cast(), &mut out) },
        CtrStatus::InvalidUtf8
    );
}

#[test]
fn kinematics_match_the_library() {
    let r = robot();
    let core = Robot::from_toml(CANONICAL).unwrap();
    let (t, a) = ([100.0, 160.0], [15.0, -40.0]);
    let joints = ctr_core::JointConfig::new(t.to_vec(), a.to_vec());
    let fk = forward_kinematics(&core.tubes, &joints).unwrap();

    let mut pose = CtrPose::default();
    assert_eq!(
        unsafe { ctr_forward_kinematics(r.0, t.as_ptr(), a.as_ptr(), 2, &mut pose) },
        CtrStatus::Ok
    );
    assert_eq!(
        pose.translation,
        [fk.tip.translation.x, fk.tip.translation.y, fk.tip.translation.z]
    );
    assert_eq!(pose.rotation[1], fk.tip.rotation[(0, 1)]);
    assert_eq!(pose.rotation[3], fk.tip.rotation[(1, 0)]);

    let mut count = 0;
    assert_eq!(
        unsafe { ctr_links(r.0, t.as_ptr(), a.as_ptr(), 2, ptr::null_mut(), 0, &mut count) },
        CtrStatus::BufferTooSmall
    );
    assert_eq!(count, 3);
    let mut links = vec![CtrLink::default(); count];
    assert_eq!(
        unsafe { ctr_links(r.0, t.as_ptr(), a.as_ptr(), 2, links.as_mut_ptr(), count, &mut count) },
        CtrStatus::Ok
    );
    for (c, l) in links.iter().zip(&fk.links) {
        assert_eq!(
            (c.start, c.arc_length, c.curvature),
            (l.start, l.arc_length, l.curvature)
        );
        assert_eq!(c.absolute_plane_angle, l.absolute_plane_angle);
        assert_eq!(c.member_count, l.member_tubes.len());
    }

    let expected = sample_backbone(&core.tubes, &joints, 5.0).unwrap();
    let mut n = 0;
    unsafe {
        ctr_backbone(
            r.0,
            t.as_ptr(),
            a.as_ptr(),
            2,
            5.0,
            ptr::null_mut(),
            ptr::null_mut(),
            0,
            &mut n,
        )
    };
    assert_eq!(n, expected.len());
    let mut points = vec![0.0; 3 * n];
    let mut s = vec![0.0; n];
    assert_eq!(
        unsafe {
            ctr_backbone(
                r.0,
                t.as_ptr(),
                a.as_ptr(),
                2,
                5.0,
                points.as_mut_ptr(),
                s.as_mut_ptr(),
                n,
                &mut n,
            )
        },
        CtrStatus::Ok
    );
    for (i, p) in expected.iter().enumerate() {
        assert_eq!(&points[3 * i..3 * i + 3], &p.point);
        assert_eq!(s[i], p.s);
    }

    let too_far = [150.0, 160.0];
    assert_eq!(
        unsafe { ctr_forward_kinematics(r.0, too_far.as_ptr(), a.as_ptr(), 2, &mut pose) },
        CtrStatus::InvalidConfiguration
    );
    assert!(last_error().contains("exceeds tube length"), "{}", last_error());
}

#[test]
fn emitted_gcode_drives_the_controller() {
    let r = robot();
    let (t, a) = ([110.0, 170.0], [10.0, -20.0]);
    let mut program = ptr::null_mut();
    assert_eq!(
        unsafe { ctr_gcode_emit(r.0, t.as_ptr(), a.as_ptr(), 2, 0.0, &mut program) },
        CtrStatus::Ok
    );
    let program = unsafe { take_string(program) };
    assert_eq!(program, "G90\nG1 X30.000 A10.000 Y40.000 B-20.000\n");

    let mut c = ptr::null_mut();
    assert_eq!(unsafe { ctr_controller_new(r.0, &mut c) }, CtrStatus::Ok);
    let line = |text: &str| {
        let text = CString::new(text).unwrap();
        let mut reply = ptr::null_mut();
        let status = unsafe { ctr_controller_apply_line(c, text.as_ptr(), &mut reply) };
        let reply = (!reply.is_null()).then(|| unsafe { take_string(reply) });
        (status, reply)
    };
    assert_eq!(line("G1 X1").0, CtrStatus::NotHomed);
    assert_eq!(line("G28"), (CtrStatus::Ok, Some("ok".to_owned())));
    for l in program.lines() {
        assert_eq!(line(l).0, CtrStatus::Ok);
    }
    assert_eq!(line("  ; comment only"), (CtrStatus::Ok, None));
    assert_eq!(
        line("M114"),
        (CtrStatus::Ok, Some("X30.000 A10.014 Y40.000 B-20.027".to_owned()))
    );
    assert_eq!(line("G1 X51").0, CtrStatus::JointLimit);
    assert_eq!(line("G1 Y-10").0, CtrStatus::JointLimit);
    assert_eq!(line("G7").0, CtrStatus::GcodeError);

    let mut x = 0.0;
    assert_eq!(
        unsafe { ctr_controller_axis_position(c, b'x' as _, &mut x) },
        CtrStatus::Ok
    );
    assert_eq!(x, 30.0);
    assert_eq!(
        unsafe { ctr_controller_axis_position(c, b'Q' as _, &mut x) },
        CtrStatus::GcodeError
    );
    assert_eq!(
        unsafe { ctr_controller_apply_line(c, CString::new("G1 X2").unwrap().as_ptr(), ptr::null_mut()) },
        CtrStatus::Ok
    );
    unsafe { ctr_controller_free(c) };

    // emission does not check cart travel; the controller does
    let outside = [100.0, 120.0];
    let mut program = ptr::null_mut();
    assert_eq!(
        unsafe { ctr_gcode_emit(r.0, outside.as_ptr(), a.as_ptr(), 2, 1200.0, &mut program) },
        CtrStatus::Ok
    );
    let program = unsafe { take_string(program) };
    assert_eq!(program, "G90\nG1 X20.000 A10.000 Y-10.000 B-20.000 F1200\n");

    let reversed = [160.0, 100.0];
    let mut program = ptr::null_mut();
    assert_eq!(
        unsafe { ctr_gcode_emit(r.0, reversed.as_ptr(), a.as_ptr(), 2, 0.0, &mut program) },
        CtrStatus::InvalidConfiguration
    );
    assert!(program.is_null());
}

#[test]
fn registration_round_trip() {
    let rz = 30f64.to_radians();
    let (c, s) = (rz.cos(), rz.sin());
    let tracker = [0.0, 0.0, 0.0, 10.0, 0.0, 0.0, 0.0, 10.0, 0.0, 0.0, 0.0, 10.0];
    let mut base = [0.0; 12];
    for i in 0..4 {
        let (x, y, z) = (tracker[3 * i], tracker[3 * i + 1], tracker[3 * i + 2]);
        base[3 * i] = c * x - s * y + 1.0;
        base[3 * i + 1] = s * x + c * y + 2.0;
        base[3 * i + 2] = z + 3.0;
    }
    let mut pose = CtrPose::default();
    let mut rmse = -1.0;
    assert_eq!(
        unsafe { ctr_register_frames(tracker.as_ptr(), base.as_ptr(), 4, &mut pose, &mut rmse) },
        CtrStatus::Ok
    );
    let expected = [c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0];
    for (got, want) in pose.rotation.iter().zip(expected) {
        assert!((got - want).abs() < 1e-12);
    }
    for (got, want) in pose.translation.iter().zip([1.0, 2.0, 3.0]) {
        assert!((got - want).abs() < 1e-12);
    }
    assert!(rmse < 1e-12);

    let line = [0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0];
    assert_eq!(
        unsafe { ctr_register_frames(line.as_ptr(), line.as_ptr(), 3, &mut pose, ptr::null_mut()) },
        CtrStatus::Degenerate
    );
}

#[test]
fn errors_are_per_thread() {
    let r = robot();
    let bad = [200.0, 300.0];
    let zero = [0.0, 0.0];
    let mut pose = CtrPose::default();
    unsafe { ctr_forward_kinematics(r.0, bad.as_ptr(), zero.as_ptr(), 2, &mut pose) };
    assert!(!ctr_last_error_message().is_null());
    std::thread::spawn(|| assert!(ctr_last_error_message().is_null()))
        .join()
        .unwrap();
    assert!(!ctr_last_error_message().is_null());
}

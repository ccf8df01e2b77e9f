//! C ABI for `ctr-core`.
//!
//! Robots and controllers are opaque heap handles created and released by the
//! matching `*_new`/`*_free` pair. Every fallible call returns a [`CtrStatus`];
//! on failure [`ctr_last_error_message`] describes the cause for the calling
//! thread. Strings returned through out-parameters are owned by the caller and
//! must be released with [`ctr_string_free`].
//!
//! Joint arrays are passed as two parallel `double` arrays (translations in
//! mm, rotations in degrees) of length `n`, outermost tube first.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ctr_core::actuation::{ActuationError, ControllerState};
use ctr_core::gcode::{emit_move, parse_line, AxisMap, GcodeError};
use ctr_core::kinematics::{forward_kinematics, sample_backbone, JointConfig};
use ctr_core::metrology::{register_frames, MetrologyError, PointPair};
use ctr_core::robot_file::RobotFileError;
use ctr_core::{KinematicsError, Robot};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CtrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Robot description could not be parsed.
    ParseError = 3,
    /// Tube parameters or joint values violate the model's invariants.
    InvalidConfiguration = 4,
    /// The bending plane is undefined or registration points are degenerate.
    Degenerate = 5,
    /// G-code line could not be parsed or names an unknown axis.
    GcodeError = 6,
    /// Move target outside an axis' travel limits.
    JointLimit = 7,
    /// Move before homing.
    NotHomed = 8,
    /// Output buffer too small; the required count was written.
    BufferTooSmall = 9,
    Panic = 10,
}

/// Opaque robot: tubes, axis assignment and initial joints.
pub struct CtrRobot {
    robot: Robot,
}

/// Opaque virtual motion controller bound to one robot's axes.
pub struct CtrController {
    state: ControllerState,
    axis_map: AxisMap,
}

/// One constant-curvature link.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CtrLink {
    /// Arc length where the link starts (mm).
    pub start: f64,
    pub arc_length: f64,
    /// 1/mm
    pub curvature: f64,
    /// Bending plane relative to the previous link (degrees).
    pub plane_angle: f64,
    /// Bending plane in the base frame (degrees).
    pub absolute_plane_angle: f64,
    /// Number of tubes present along the link.
    pub member_count: usize,
}

/// Rigid transform; `rotation` is row-major.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CtrPose {
    pub rotation: [f64; 9],
    pub translation: [f64; 3],
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(CtrStatus, String);

type FfiResult<T = ()> = Result<T, Failure>;

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> FfiResult) -> CtrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            CtrStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".to_owned());
            CtrStatus::Panic
        }
    }
}

impl From<KinematicsError> for Failure {
    fn from(e: KinematicsError) -> Self {
        let status = match e {
            KinematicsError::DegeneratePlane { .. } => CtrStatus::Degenerate,
            _ => CtrStatus::InvalidConfiguration,
        };
        Failure(status, e.to_string())
    }
}

impl From<RobotFileError> for Failure {
    fn from(e: RobotFileError) -> Self {
        let status = match e {
            RobotFileError::Syntax(_) => CtrStatus::ParseError,
            _ => CtrStatus::InvalidConfiguration,
        };
        Failure(status, e.to_string())
    }
}

impl From<GcodeError> for Failure {
    fn from(e: GcodeError) -> Self {
        let status = match e {
            GcodeError::Config(_) => CtrStatus::InvalidConfiguration,
            _ => CtrStatus::GcodeError,
        };
        Failure(status, e.to_string())
    }
}

impl From<ActuationError> for Failure {
    fn from(e: ActuationError) -> Self {
        let status = match e {
            ActuationError::Limit { .. } => CtrStatus::JointLimit,
            ActuationError::NotHomed(_) => CtrStatus::NotHomed,
            ActuationError::InvalidExperiment(_) => CtrStatus::InvalidConfiguration,
            ActuationError::UnknownAxis(_) | ActuationError::Gcode(_) => CtrStatus::GcodeError,
        };
        Failure(status, e.to_string())
    }
}

impl From<MetrologyError> for Failure {
    fn from(e: MetrologyError) -> Self {
        let status = match e {
            MetrologyError::DegenerateGeometry(_) => CtrStatus::Degenerate,
            _ => CtrStatus::InvalidConfiguration,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(CtrStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(CtrStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> FfiResult<&'a T> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> FfiResult<&'a mut T> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn slice_arg<'a>(p: *const f64, n: usize, what: &str) -> FfiResult<&'a [f64]> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn joints_arg(translations: *const f64, rotations: *const f64, n: usize) -> FfiResult<JointConfig> {
    Ok(JointConfig::new(
        slice_arg(translations, n, "translations")?.to_vec(),
        slice_arg(rotations, n, "rotations")?.to_vec(),
    ))
}

fn string_out(out: &mut *mut c_char, text: String) -> FfiResult {
    let c = CString::new(text).map_err(|e| Failure(CtrStatus::GcodeError, e.to_string()))?;
    *out = c.into_raw();
    Ok(())
}

/// Message for the last failed call on this thread, or null after a
/// successful one. Valid until the next call into this library on the same
/// thread.
#[no_mangle]
pub extern "C" fn ctr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ctr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn ctr_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a robot from the text of a TOML robot description.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ctr_robot_from_toml(toml: *const c_char, out: *mut *mut CtrRobot) -> CtrStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let robot = Robot::from_toml(str_arg(toml, "toml")?)?;
        *out = Box::into_raw(Box::new(CtrRobot { robot }));
        Ok(())
    })
}

/// Releases a robot. Null is ignored.
///
/// # Safety
/// `robot` must come from [`ctr_robot_from_toml`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ctr_robot_free(robot: *mut CtrRobot) {
    if !robot.is_null() {
        drop(Box::from_raw(robot));
    }
}

/// # Safety
/// `robot` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ctr_robot_tube_count(robot: *const CtrRobot, out: *mut usize) -> CtrStatus {
    guard(|| {
        *out_arg(out, "out")? = ref_arg(robot, "robot")?.robot.tubes.len();
        Ok(())
    })
}

/// Copies the robot's initial joints into two arrays of `n` doubles, where
/// `n` must equal the tube count.
///
/// # Safety
/// Both arrays must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn ctr_robot_initial_joints(
    robot: *const CtrRobot,
    translations: *mut f64,
    rotations: *mut f64,
    n: usize,
) -> CtrStatus {
    guard(|| {
        let joints = &ref_arg(robot, "robot")?.robot.joints;
        if n != joints.translations.len() {
            return Err(Failure(
                CtrStatus::InvalidConfiguration,
                format!("robot has {} tubes, got n = {n}", joints.translations.len()),
            ));
        }
        if n > 0 && (translations.is_null() || rotations.is_null()) {
            return Err(null("joint array"));
        }
        for i in 0..n {
            *translations.add(i) = joints.translations[i];
            *rotations.add(i) = joints.rotations[i];
        }
        Ok(())
    })
}

/// Tip pose for the given joints.
///
/// # Safety
/// Joint arrays must hold `n` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ctr_forward_kinematics(
    robot: *const CtrRobot,
    translations: *const f64,
    rotations: *const f64,
    n: usize,
    out: *mut CtrPose,
) -> CtrStatus {
    guard(|| {
        let robot = &ref_arg(robot, "robot")?.robot;
        let out = out_arg(out, "out")?;
        let fk = forward_kinematics(&robot.tubes, &joints_arg(translations, rotations, n)?)?;
        for r in 0..3 {
            for c in 0..3 {
                out.rotation[3 * r + c] = fk.tip.rotation[(r, c)];
            }
        }
        out.translation = [fk.tip.translation.x, fk.tip.translation.y, fk.tip.translation.z];
        Ok(())
    })
}

/// Writes up to `capacity` links into `links` and the total count into
/// `count`. Returns [`CtrStatus::BufferTooSmall`] when `capacity < count`;
/// pass `capacity = 0` to query the count.
///
/// # Safety
/// Joint arrays must hold `n` doubles; `links` must hold `capacity` entries.
#[no_mangle]
pub unsafe extern "C" fn ctr_links(
    robot: *const CtrRobot,
    translations: *const f64,
    rotations: *const f64,
    n: usize,
    links: *mut CtrLink,
    capacity: usize,
    count: *mut usize,
) -> CtrStatus {
    guard(|| {
        let robot = &ref_arg(robot, "robot")?.robot;
        let count = out_arg(count, "count")?;
        let joints = joints_arg(translations, rotations, n)?;
        let solved = forward_kinematics(&robot.tubes, &joints)?.links;
        *count = solved.len();
        if capacity < solved.len() {
            return Err(Failure(
                CtrStatus::BufferTooSmall,
                format!("{} links, buffer holds {capacity}", solved.len()),
            ));
        }
        if links.is_null() {
            return Err(null("links"));
        }
        for (i, l) in solved.iter().enumerate() {
            *links.add(i) = CtrLink {
                start: l.start,
                arc_length: l.arc_length,
                curvature: l.curvature,
                plane_angle: l.plane_angle,
                absolute_plane_angle: l.absolute_plane_angle,
                member_count: l.member_tubes.len(),
            };
        }
        Ok(())
    })
}

/// Samples the centerline every `ds` mm (plus every link boundary and the
/// tip). Writes `x, y, z` triples into `points` (room for `capacity` points,
/// i.e. `3 * capacity` doubles), the arc length of each point into
/// `arc_lengths` when non-null, and the total point count into `count`.
///
/// # Safety
/// Joint arrays must hold `n` doubles; output arrays must be sized as above.
#[no_mangle]
pub unsafe extern "C" fn ctr_backbone(
    robot: *const CtrRobot,
    translations: *const f64,
    rotations: *const f64,
    n: usize,
    ds: f64,
    points: *mut f64,
    arc_lengths: *mut f64,
    capacity: usize,
    count: *mut usize,
) -> CtrStatus {
    guard(|| {
        let robot = &ref_arg(robot, "robot")?.robot;
        let count = out_arg(count, "count")?;
        let samples = sample_backbone(&robot.tubes, &joints_arg(translations, rotations, n)?, ds)?;
        *count = samples.len();
        if capacity < samples.len() {
            return Err(Failure(
                CtrStatus::BufferTooSmall,
                format!("{} points, buffer holds {capacity}", samples.len()),
            ));
        }
        if points.is_null() {
            return Err(null("points"));
        }
        for (i, p) in samples.iter().enumerate() {
            for k in 0..3 {
                *points.add(3 * i + k) = p.point[k];
            }
            if !arc_lengths.is_null() {
                *arc_lengths.add(i) = p.s;
            }
        }
        Ok(())
    })
}

/// G-code program that drives the robot's carts to the given joints. A
/// `feed` of zero or less omits the feed word. Release `out` with
/// [`ctr_string_free`].
///
/// # Safety
/// Joint arrays must hold `n` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ctr_gcode_emit(
    robot: *const CtrRobot,
    translations: *const f64,
    rotations: *const f64,
    n: usize,
    feed: f64,
    out: *mut *mut c_char,
) -> CtrStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let robot = &ref_arg(robot, "robot")?.robot;
        let joints = joints_arg(translations, rotations, n)?;
        joints.validate(&robot.tubes)?;
        let feed = (feed > 0.0).then_some(feed);
        string_out(out, emit_move(&joints, &robot.axis_map, feed)?)
    })
}

/// New controller for the robot's axes, unhomed and in absolute mode.
///
/// # Safety
/// `robot` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ctr_controller_new(robot: *const CtrRobot, out: *mut *mut CtrController) -> CtrStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let axis_map = ref_arg(robot, "robot")?.robot.axis_map.clone();
        *out = Box::into_raw(Box::new(CtrController {
            state: ControllerState::new(&axis_map),
            axis_map,
        }));
        Ok(())
    })
}

/// Releases a controller. Null is ignored.
///
/// # Safety
/// `controller` must come from [`ctr_controller_new`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ctr_controller_free(controller: *mut CtrController) {
    if !controller.is_null() {
        drop(Box::from_raw(controller));
    }
}

/// Executes one G-code line. On success `reply` (when non-null) receives the
/// firmware reply, `ok` or a position report, or null for a blank line. A
/// rejected line leaves the controller unchanged.
///
/// # Safety
/// `controller` must be valid and `line` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ctr_controller_apply_line(
    controller: *mut CtrController,
    line: *const c_char,
    reply: *mut *mut c_char,
) -> CtrStatus {
    guard(|| {
        if let Some(r) = reply.as_mut() {
            *r = ptr::null_mut();
        }
        let c = out_arg(controller, "controller")?;
        let Some(command) = parse_line(str_arg(line, "line")?, &c.axis_map)? else {
            return Ok(());
        };
        let text = c.state.apply(&command)?;
        match reply.as_mut() {
            Some(r) => string_out(r, text),
            None => Ok(()),
        }
    })
}

/// Actual (step-quantized) position of axis `letter`, in mm or degrees.
///
/// # Safety
/// `controller` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ctr_controller_axis_position(
    controller: *const CtrController,
    letter: c_char,
    out: *mut f64,
) -> CtrStatus {
    guard(|| {
        let c = ref_arg(controller, "controller")?;
        let letter = (letter as u8 as char).to_ascii_uppercase();
        let axis = c
            .state
            .axis(letter)
            .ok_or_else(|| Failure(CtrStatus::GcodeError, format!("unknown axis {letter}")))?;
        *out_arg(out, "out")? = axis.actual();
        Ok(())
    })
}

/// Least-squares rigid transform mapping tracker coordinates onto base
/// coordinates from `n` corresponding points (`3 * n` doubles each).
///
/// # Safety
/// Point arrays must hold `3 * n` doubles; `out` must be valid; `fit_rmse`
/// may be null.
#[no_mangle]
pub unsafe extern "C" fn ctr_register_frames(
    tracker_points: *const f64,
    base_points: *const f64,
    n: usize,
    out: *mut CtrPose,
    fit_rmse: *mut f64,
) -> CtrStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let tracker = slice_arg(tracker_points, 3 * n, "tracker_points")?;
        let base = slice_arg(base_points, 3 * n, "base_points")?;
        let pairs: Vec<PointPair> = tracker
            .chunks_exact(3)
            .zip(base.chunks_exact(3))
            .map(|(t, b)| PointPair::new([t[0], t[1], t[2]], [b[0], b[1], b[2]]))
            .collect();
        let reg = register_frames(&pairs)?;
        let pose = &reg.tracker_to_base;
        for r in 0..3 {
            for c in 0..3 {
                out.rotation[3 * r + c] = pose.rotation[(r, c)];
            }
        }
        out.translation = [pose.translation.x, pose.translation.y, pose.translation.z];
        if let Some(rmse) = fit_rmse.as_mut() {
            *rmse = reg.fit_rmse;
        }
        Ok(())
    })
}

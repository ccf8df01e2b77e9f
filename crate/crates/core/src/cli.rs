//! The `ctr` command line.
//!
//! Joint arguments use the `r=…;t=…` grammar: comma-separated deployed
//! lengths (mm) and rotations (degrees), outermost tube first, for example
//! `r=100,160;t=0,90`. Either half may be omitted, in which case the robot
//! file's initial values are kept. `zero` deploys every tube fully with zero
//! rotation.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::{Translation3, UnitQuaternion, Vector3};
use serde::Serialize;

use crate::actuation::{run_accuracy_experiment, run_accuracy_experiment_with, ControllerState, NoiseModel};
use crate::gcode::{emit_move, parse_line, GcodeCommand};
use crate::kinematics::{forward_kinematics, sample_backbone, JointConfig, Link, Pose, Section};
use crate::metrology::{
    in_plane_experiment, out_of_plane_experiment, pair_by_label, read_measured_points, register_frames,
    simulate_tracking_session, tip_tracking_comparison, ExperimentRecord,
};
use crate::robot_file::Robot;
use crate::service::{ServiceConfig, DEFAULT_BACKBONE_DS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "ctr",
    version,
    about = "Concentric tube robot kinematics and virtual actuation toolkit"
)]
pub struct Cli {
    /// Machine-readable JSON output
    #[arg(long, global = true)]
    pub json: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a robot description file
    Validate { robot: PathBuf },
    /// Print the link partition for a configuration
    Links(RobotJoints),
    /// Print the tip pose and per-link table
    Fk(RobotJoints),
    /// Sample the centerline as CSV (s,x,y,z)
    Backbone {
        #[command(flatten)]
        target: RobotJoints,
        /// Sampling step in mm
        #[arg(long, default_value_t = DEFAULT_BACKBONE_DS)]
        ds: f64,
    },
    /// Emit or parse actuation-unit G-code
    #[command(subcommand)]
    Gcode(GcodeCommandArgs),
    /// Run a verification experiment
    #[command(subcommand)]
    Experiment(ExperimentArgs),
    /// Start the HTTP/WebSocket service
    Serve(ServeArgs),
    /// Serve the firmware line protocol over TCP for one robot
    Firmware {
        robot: PathBuf,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 8643)]
        port: u16,
    },
}

#[derive(Debug, Args)]
pub struct RobotJoints {
    pub robot: PathBuf,
    /// Joint values, e.g. "r=100,160;t=0,0" or "zero"
    #[arg(long)]
    pub joints: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum GcodeCommandArgs {
    /// Print the move program for a joint target
    Emit {
        #[command(flatten)]
        target: RobotJoints,
        /// Feed rate (units/min)
        #[arg(long)]
        feed: Option<f64>,
    },
    /// Parse a program (file or "-" for stdin); optionally run it on a virtual controller
    Parse {
        robot: PathBuf,
        #[arg(default_value = "-")]
        program: String,
        /// Execute the commands and print firmware replies
        #[arg(long)]
        apply: bool,
    },
}

#[derive(Debug, Subcommand)]
pub enum ExperimentArgs {
    /// Positioning accuracy of one cart through the G-code path
    Accuracy {
        /// Robot whose first cart is exercised (default: single X/A cart)
        #[arg(long)]
        robot: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Gaussian tracker noise on translation (mm)
        #[arg(long)]
        sigma: Option<f64>,
        /// Gaussian tracker noise on rotation (degrees)
        #[arg(long)]
        sigma_rot: Option<f64>,
        /// Fixed tracker bias on translation (mm)
        #[arg(long, conflicts_with_all = ["sigma", "sigma_rot"])]
        offset: Option<f64>,
        /// Fixed tracker bias on rotation (degrees)
        #[arg(long, conflicts_with_all = ["sigma", "sigma_rot"])]
        offset_rot: Option<f64>,
        /// Write every trial to this CSV file
        #[arg(long)]
        trials_csv: Option<PathBuf>,
    },
    /// Translate the innermost tube with all tubes in one plane
    InPlane {
        #[command(flatten)]
        target: RobotJoints,
        /// Translation of the innermost tube (mm)
        #[arg(long, allow_hyphen_values = true)]
        delta: f64,
        /// Measured tips (frame_label,x,y,z; rows "before" and "after")
        #[arg(long)]
        measured: Option<PathBuf>,
    },
    /// Rotate one tube and watch the bending plane
    OutOfPlane {
        #[command(flatten)]
        target: RobotJoints,
        /// Tube index, 1 = outermost
        #[arg(long)]
        tube: u32,
        /// Rotation (degrees)
        #[arg(long, allow_hyphen_values = true)]
        delta: f64,
        #[arg(long)]
        measured: Option<PathBuf>,
    },
    /// Register a tracker and compare tip readings with the model
    Tracking {
        #[command(flatten)]
        target: RobotJoints,
        /// Landmarks in tracker coordinates (frame_label,x,y,z)
        #[arg(long, requires = "base_points")]
        tracker_points: Option<PathBuf>,
        /// The same landmarks in base coordinates
        #[arg(long, requires = "tracker_points")]
        base_points: Option<PathBuf>,
        /// Measured tip in tracker coordinates, "x,y,z"
        #[arg(long, requires = "tracker_points", allow_hyphen_values = true)]
        tip: Option<String>,
        /// Without point files: number of simulated poses
        #[arg(long, default_value_t = 10)]
        poses: usize,
        /// Without point files: tracker noise (mm)
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Overrides CTR_HOST
    #[arg(long)]
    pub host: Option<String>,
    /// Overrides CTR_PORT
    #[arg(long)]
    pub port: Option<u16>,
    /// Snapshot file; overrides CTR_SNAPSHOT
    #[arg(long)]
    pub snapshot: Option<PathBuf>,
    /// Backbone sampling step for pushed events (mm)
    #[arg(long)]
    pub ds: Option<f64>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => EXIT_USAGE,
            Self::Validation(_) => EXIT_VALIDATION,
        }
    }
}

fn validation(e: impl std::fmt::Display) -> CliError {
    CliError::Validation(e.to_string())
}

type CliResult<T = ()> = Result<T, CliError>;

/// Parses the `r=…;t=…` grammar against `robot`.
pub fn parse_joints(spec: &str, robot: &Robot) -> CliResult<JointConfig> {
    let spec = spec.trim();
    if spec.eq_ignore_ascii_case("zero") {
        return Ok(JointConfig::fully_extended(&robot.tubes));
    }
    let mut joints = robot.joints.clone();
    let mut seen = Vec::new();
    for part in spec.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, values) = part
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("joint group `{part}` must look like r=… or t=…")))?;
        let key = key.trim().to_ascii_lowercase();
        if seen.contains(&key) {
            return Err(CliError::Usage(format!("joint group `{key}` given twice")));
        }
        let values = values
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| CliError::Usage(format!("`{}` is not a number in `{part}`", v.trim())))
            })
            .collect::<CliResult<Vec<f64>>>()?;
        if values.len() != robot.tubes.len() {
            return Err(CliError::Usage(format!(
                "`{key}` needs {} values, got {}",
                robot.tubes.len(),
                values.len()
            )));
        }
        match key.as_str() {
            "r" => joints.translations = values,
            "t" => joints.rotations = values,
            _ => return Err(CliError::Usage(format!("unknown joint group `{key}`; use r or t"))),
        }
        seen.push(key);
    }
    if seen.is_empty() {
        return Err(CliError::Usage("empty joint specification".into()));
    }
    joints.validate(&robot.tubes).map_err(validation)?;
    Ok(joints)
}

fn load(path: &Path) -> CliResult<Robot> {
    Robot::load(path).map_err(validation)
}

fn load_with_joints(target: &RobotJoints) -> CliResult<(Robot, JointConfig)> {
    let robot = load(&target.robot)?;
    let joints = match &target.joints {
        Some(spec) => parse_joints(spec, &robot)?,
        None => robot.joints.clone(),
    };
    Ok((robot, joints))
}

fn to_json(value: &impl Serialize) -> CliResult<String> {
    serde_json::to_string_pretty(value).map_err(validation)
}

fn members(link: &Link) -> String {
    link.member_tubes
        .iter()
        .map(|m| {
            format!(
                "{}{}",
                m.tube,
                match m.section {
                    Section::Straight => 's',
                    Section::Curved => 'c',
                }
            )
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn link_table(links: &[Link]) -> String {
    let mut out = format!(
        "{:>4} {:>10} {:>10} {:>10} {:>12} {:>10} {:>10}  {}\n",
        "link", "start", "end", "length", "kappa", "phi", "phi_abs", "tubes"
    );
    for (i, l) in links.iter().enumerate() {
        let _ = writeln!(
            out,
            "{:>4} {:>10.4} {:>10.4} {:>10.4} {:>12.8} {:>10.4} {:>10.4}  {}",
            i + 1,
            l.start,
            l.end(),
            l.arc_length,
            l.curvature,
            l.plane_angle,
            l.absolute_plane_angle,
            members(l)
        );
    }
    out
}

fn pose_text(pose: &Pose) -> String {
    let t = pose.translation;
    let r = pose.rotation;
    let mut out = format!("tip position (mm): {:.6} {:.6} {:.6}\ntip rotation:\n", t.x, t.y, t.z);
    for i in 0..3 {
        let _ = writeln!(out, "  {:>10.6} {:>10.6} {:>10.6}", r[(i, 0)], r[(i, 1)], r[(i, 2)]);
    }
    out
}

fn record_text(record: &ExperimentRecord) -> String {
    let mut out = String::new();
    let labels: &[&str] = if record.predicted.len() == 2 {
        &["before", "after"]
    } else {
        &["tip"]
    };
    for (i, p) in record.predicted.iter().enumerate() {
        let _ = write!(
            out,
            "{:<7} predicted {:>10.4} {:>10.4} {:>10.4}",
            labels.get(i).unwrap_or(&"tip"),
            p[0],
            p[1],
            p[2]
        );
        if let (Some(m), Some(e)) = (record.measured.get(i), record.error_norms.get(i)) {
            let _ = write!(
                out,
                "  measured {:>10.4} {:>10.4} {:>10.4}  error {:.4}",
                m[0], m[1], m[2], e
            );
        }
        out.push('\n');
    }
    if let Some(d) = record.displacement() {
        let _ = writeln!(out, "displacement {:.4} {:.4} {:.4}", d[0], d[1], d[2]);
    }
    if let Some(ip) = &record.in_plane {
        let _ = writeln!(
            out,
            "bending plane {:.4} deg, tips in plane (r,z): ({:.4}, {:.4}) -> ({:.4}, {:.4}), out-of-plane residual {:.3e} mm",
            ip.plane_angle,
            ip.tips_in_plane[0][0],
            ip.tips_in_plane[0][1],
            ip.tips_in_plane[1][0],
            ip.tips_in_plane[1][1],
            ip.coplanarity_residual
        );
    }
    if let Some(op) = &record.out_of_plane {
        let _ = writeln!(
            out,
            "tube {} distal plane {:.4} -> {:.4} deg (change {:.4})",
            op.tube, op.distal_angle_before, op.distal_angle_after, op.angle_change
        );
    }
    out
}

fn read_points(path: &Path) -> CliResult<Vec<crate::metrology::MeasuredPoint>> {
    let file = std::fs::File::open(path).map_err(|e| validation(format!("{}: {e}", path.display())))?;
    read_measured_points(file).map_err(validation)
}

fn measured_from(path: &Option<PathBuf>) -> CliResult<Option<Vec<[f64; 3]>>> {
    path.as_ref()
        .map(|p| Ok(read_points(p)?.iter().map(|m| m.position()).collect()))
        .transpose()
}

fn parse_triple(text: &str) -> CliResult<[f64; 3]> {
    let v: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("`{text}` must be three comma-separated numbers")))?;
    <[f64; 3]>::try_from(v).map_err(|_| CliError::Usage(format!("`{text}` must be three comma-separated numbers")))
}

/// Tracker placement used by the simulated tracking session.
pub fn default_tracker_pose() -> Pose {
    let iso = Translation3::new(120.0, -40.0, 250.0) * UnitQuaternion::from_scaled_axis(Vector3::new(0.3, -0.5, 2.2));
    Pose::new(*iso.rotation.to_rotation_matrix().matrix(), iso.translation.vector)
}

fn noise_model(sigma: Option<f64>, sigma_rot: Option<f64>, offset: Option<f64>, offset_rot: Option<f64>) -> NoiseModel {
    if sigma.is_some() || sigma_rot.is_some() {
        NoiseModel::Gaussian {
            sigma_translation: sigma.unwrap_or(0.0),
            sigma_rotation: sigma_rot.unwrap_or(0.0),
        }
    } else if offset.is_some() || offset_rot.is_some() {
        NoiseModel::FixedOffset {
            translation: offset.unwrap_or(0.0),
            rotation: offset_rot.unwrap_or(0.0),
        }
    } else {
        NoiseModel::None
    }
}

fn execute(cli: Cli, out: &mut dyn Write) -> CliResult {
    let json = cli.json;
    let text = match cli.command {
        Command::Validate { robot } => {
            let robot = load(&robot)?;
            let fk = forward_kinematics(&robot.tubes, &robot.joints).map_err(validation)?;
            if json {
                to_json(&serde_json::json!({
                    "valid": true,
                    "description": robot.to_description(),
                    "links": fk.links.len(),
                }))?
            } else {
                format!(
                    "ok: {} with {} tubes, axes {}, {} links at the initial configuration\n",
                    robot.name.as_deref().unwrap_or("robot"),
                    robot.tubes.len(),
                    robot
                        .axis_map
                        .axes()
                        .map(|a| a.letter.to_string())
                        .collect::<Vec<_>>()
                        .join(""),
                    fk.links.len()
                )
            }
        }
        Command::Links(target) => {
            let (robot, joints) = load_with_joints(&target)?;
            let fk = forward_kinematics(&robot.tubes, &joints).map_err(validation)?;
            if json {
                to_json(&fk.links)?
            } else {
                link_table(&fk.links)
            }
        }
        Command::Fk(target) => {
            let (robot, joints) = load_with_joints(&target)?;
            let fk = forward_kinematics(&robot.tubes, &joints).map_err(validation)?;
            if json {
                to_json(&fk)?
            } else {
                format!("{}\n{}", pose_text(&fk.tip), link_table(&fk.links))
            }
        }
        Command::Backbone { target, ds } => {
            let (robot, joints) = load_with_joints(&target)?;
            let points = sample_backbone(&robot.tubes, &joints, ds).map_err(validation)?;
            if json {
                to_json(&serde_json::json!({ "ds": ds, "points": points }))?
            } else {
                let mut w = csv::Writer::from_writer(Vec::new());
                let csv_err = |e: csv::Error| validation(e);
                w.write_record(["s", "x", "y", "z"]).map_err(csv_err)?;
                for p in &points {
                    w.write_record([p.s, p.point[0], p.point[1], p.point[2]].map(|v| v.to_string()))
                        .map_err(csv_err)?;
                }
                String::from_utf8(w.into_inner().map_err(|e| validation(e.to_string()))?).map_err(validation)?
            }
        }
        Command::Gcode(GcodeCommandArgs::Emit { target, feed }) => {
            let (robot, joints) = load_with_joints(&target)?;
            let program = emit_move(&joints, &robot.axis_map, feed).map_err(validation)?;
            if json {
                to_json(&serde_json::json!({ "program": program }))?
            } else {
                program
            }
        }
        Command::Gcode(GcodeCommandArgs::Parse { robot, program, apply }) => {
            let robot = load(&robot)?;
            let text = if program == "-" {
                let mut s = String::new();
                std::io::stdin().read_to_string(&mut s).map_err(validation)?;
                s
            } else {
                std::fs::read_to_string(&program).map_err(|e| validation(format!("{program}: {e}")))?
            };
            let mut controller = ControllerState::new(&robot.axis_map);
            let mut commands: Vec<(usize, GcodeCommand, Option<String>)> = Vec::new();
            let mut failed = None;
            for (i, line) in text.lines().enumerate() {
                match parse_line(line, &robot.axis_map) {
                    Ok(None) => {}
                    Ok(Some(cmd)) => {
                        let reply = apply.then(|| match controller.apply(&cmd) {
                            Ok(r) => r,
                            Err(e) => {
                                failed.get_or_insert_with(|| format!("line {}: {e}", i + 1));
                                format!("error: {e}")
                            }
                        });
                        commands.push((i + 1, cmd, reply));
                    }
                    Err(e) => return Err(validation(format!("line {}: {e}", i + 1))),
                }
            }
            let rendered = if json {
                let list: Vec<_> = commands
                    .iter()
                    .map(|(line, cmd, reply)| serde_json::json!({ "line": line, "command": cmd, "reply": reply }))
                    .collect();
                let mut body = serde_json::json!({ "commands": list });
                if apply {
                    body["position"] = serde_json::Value::String(controller.position_report());
                }
                to_json(&body)?
            } else {
                let mut s = String::new();
                for (line, cmd, reply) in &commands {
                    let words: Vec<String> = cmd.axis_words.iter().map(|(l, v)| format!("{l}={v}")).collect();
                    let _ = write!(s, "{line:>4}: {:?} {}", cmd.kind, words.join(" "));
                    if let Some(f) = cmd.feed {
                        let _ = write!(s, " feed={f}");
                    }
                    if let Some(r) = reply {
                        let _ = write!(s, "  -> {r}");
                    }
                    s.push('\n');
                }
                if apply {
                    let _ = writeln!(s, "position: {}", controller.position_report());
                }
                s
            };
            if let Some(msg) = failed {
                out.write_all(rendered.as_bytes()).map_err(validation)?;
                return Err(CliError::Validation(msg));
            }
            rendered
        }
        Command::Experiment(ExperimentArgs::Accuracy {
            robot,
            n,
            seed,
            sigma,
            sigma_rot,
            offset,
            offset_rot,
            trials_csv,
        }) => {
            let noise = noise_model(sigma, sigma_rot, offset, offset_rot);
            let report = match robot {
                Some(path) => run_accuracy_experiment_with(&load(&path)?.axis_map, n, seed, noise),
                None => run_accuracy_experiment(n, seed, noise),
            }
            .map_err(validation)?;
            if let Some(path) = trials_csv {
                let mut w = csv::Writer::from_path(&path).map_err(validation)?;
                for t in &report.trials {
                    w.serialize(t).map_err(validation)?;
                }
                w.flush().map_err(validation)?;
            }
            if json {
                to_json(&report)?
            } else {
                format!(
                    "trials {}  seed {}\nrmse translation {:.6} mm\nrmse rotation    {:.6} deg\n",
                    report.n_trials, report.seed, report.rmse_translation, report.rmse_rotation
                )
            }
        }
        Command::Experiment(ExperimentArgs::InPlane {
            target,
            delta,
            measured,
        }) => {
            let (robot, joints) = load_with_joints(&target)?;
            let mut record = in_plane_experiment(&robot.tubes, &joints, delta).map_err(validation)?;
            if let Some(m) = measured_from(&measured)? {
                record = record.with_measurements(m).map_err(validation)?;
            }
            if json {
                to_json(&record)?
            } else {
                record_text(&record)
            }
        }
        Command::Experiment(ExperimentArgs::OutOfPlane {
            target,
            tube,
            delta,
            measured,
        }) => {
            let (robot, joints) = load_with_joints(&target)?;
            let mut record = out_of_plane_experiment(&robot.tubes, &joints, tube, delta).map_err(validation)?;
            if let Some(m) = measured_from(&measured)? {
                record = record.with_measurements(m).map_err(validation)?;
            }
            if json {
                to_json(&record)?
            } else {
                record_text(&record)
            }
        }
        Command::Experiment(ExperimentArgs::Tracking {
            target,
            tracker_points,
            base_points,
            tip,
            poses,
            sigma,
            seed,
        }) => {
            let (robot, joints) = load_with_joints(&target)?;
            match (tracker_points, base_points) {
                (Some(tp), Some(bp)) => {
                    let pairs = pair_by_label(&read_points(&tp)?, &read_points(&bp)?).map_err(validation)?;
                    let registration = register_frames(&pairs).map_err(validation)?;
                    let record = tip
                        .map(|t| {
                            let t = parse_triple(&t)?;
                            tip_tracking_comparison(&robot.tubes, &joints, Some(&registration), t).map_err(validation)
                        })
                        .transpose()?;
                    if json {
                        to_json(&serde_json::json!({ "registration": registration, "record": record }))?
                    } else {
                        let mut s = format!(
                            "registration from {} landmarks, fit rmse {:.6} mm\n",
                            registration.pairs.len(),
                            registration.fit_rmse
                        );
                        if let Some(r) = &record {
                            s.push_str(&record_text(r));
                        }
                        s
                    }
                }
                _ => {
                    let session = simulate_tracking_session(&robot.tubes, &default_tracker_pose(), poses, sigma, seed)
                        .map_err(validation)?;
                    if json {
                        to_json(&session)?
                    } else {
                        format!(
                            "registration fit rmse {:.6} mm over {} landmarks\n{} poses: mean tip error {:.6} mm, max {:.6} mm\n",
                            session.registration.fit_rmse,
                            session.registration.pairs.len(),
                            session.records.len(),
                            session.mean_error,
                            session.max_error
                        )
                    }
                }
            }
        }
        Command::Serve(args) => {
            let mut config = ServiceConfig::from_env().map_err(CliError::Usage)?;
            if let Some(host) = args.host {
                config.host = host;
            }
            if let Some(port) = args.port {
                config.port = port;
            }
            if let Some(path) = args.snapshot {
                config.snapshot = Some(path);
            }
            if let Some(ds) = args.ds {
                config.backbone_ds = ds;
            }
            let runtime = tokio::runtime::Runtime::new().map_err(validation)?;
            runtime.block_on(crate::service::serve(config)).map_err(validation)?;
            String::new()
        }
        Command::Firmware { robot, host, port } => {
            let robot = load(&robot)?;
            let listener = std::net::TcpListener::bind((host.as_str(), port)).map_err(validation)?;
            eprintln!("firmware listening on {}", listener.local_addr().map_err(validation)?);
            let controller = std::sync::Arc::new(std::sync::Mutex::new(ControllerState::new(&robot.axis_map)));
            crate::actuation::serve_tcp(listener, controller, robot.axis_map).map_err(validation)?;
            String::new()
        }
    };
    out.write_all(text.as_bytes()).map_err(validation)?;
    if json && !text.ends_with('\n') {
        out.write_all(b"\n").map_err(validation)?;
    }
    Ok(())
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = out.write_all(rendered.as_bytes());
                return EXIT_OK;
            }
            let _ = err.write_all(rendered.as_bytes());
            return EXIT_USAGE;
        }
    };
    match execute(cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let (CliError::Usage(m) | CliError::Validation(m)) = &e;
            let _ = writeln!(err, "error: {m}");
            e.exit_code()
        }
    }
}

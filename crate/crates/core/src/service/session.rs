use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};
use tokio::sync::mpsc::{unbounded_channel, UnboundedReceiver, UnboundedSender};

use super::error::ApiError;
use crate::actuation::{AxisState, ControllerState, PositioningMode};
use crate::gcode::{emit_move, parse_line, AxisMap};
use crate::kinematics::{forward_kinematics, sample_backbone, BackbonePoint, JointConfig, Link, Pose, TubeSpec};
use crate::metrology::FrameRegistration;
use crate::robot_file::{Robot, RobotDescriptionFile};

/// Feed rate written on every move the service emits.
pub const SERVICE_FEED: f64 = 1200.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Backbone {
    pub ds: f64,
    pub points: Vec<BackbonePoint>,
}

impl Backbone {
    pub fn compute(tubes: &[TubeSpec], joints: &JointConfig, ds: f64) -> Result<Self, ApiError> {
        Ok(Self {
            ds,
            points: sample_backbone(tubes, joints, ds)?,
        })
    }
}

/// Pushed on the event stream after every applied command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateEvent {
    pub session_id: String,
    pub seq: u64,
    pub joints: JointConfig,
    pub links: Vec<Link>,
    pub tip: Pose,
    pub backbone: Backbone,
}

#[derive(Debug, Clone, Serialize)]
pub struct ControllerView {
    pub homed: bool,
    pub mode: PositioningMode,
    pub position: String,
    pub axes: Vec<AxisState>,
}

/// Full session state as returned by `GET /robots/{id}`.
#[derive(Debug, Clone, Serialize)]
pub struct SessionView {
    pub id: String,
    pub name: Option<String>,
    pub seq: u64,
    pub backbone_ds: f64,
    pub tubes: Vec<TubeSpec>,
    pub axes: AxisMap,
    pub joints: JointConfig,
    pub controller: ControllerView,
    pub links: Vec<Link>,
    pub tip: Pose,
    pub registration: Option<FrameRegistration>,
}

pub struct Session {
    pub id: String,
    pub robot: Robot,
    /// Requested joint values; kinematics is evaluated on these.
    pub joints: JointConfig,
    pub controller: ControllerState,
    pub registration: Option<FrameRegistration>,
    pub backbone_ds: f64,
    seq: u64,
    latest: Arc<str>,
    subscribers: Vec<UnboundedSender<Arc<str>>>,
}

impl Session {
    /// Homes the virtual controller and drives it to the robot's initial joints.
    pub fn start(id: String, robot: Robot, backbone_ds: f64) -> Result<Self, ApiError> {
        let mut controller = ControllerState::new(&robot.axis_map);
        let program = format!(
            "G28\n{}",
            emit_move(&robot.joints, &robot.axis_map, Some(SERVICE_FEED))?
        );
        run_program(&mut controller, &program, &robot.axis_map)?;
        let mut session = Self {
            id,
            joints: robot.joints.clone(),
            robot,
            controller,
            registration: None,
            backbone_ds,
            seq: 0,
            latest: Arc::from(""),
            subscribers: Vec::new(),
        };
        session.latest = session.render_event()?;
        Ok(session)
    }

    pub fn seq(&self) -> u64 {
        self.seq
    }

    pub fn event(&self) -> Result<StateEvent, ApiError> {
        let fk = forward_kinematics(&self.robot.tubes, &self.joints)?;
        Ok(StateEvent {
            session_id: self.id.clone(),
            seq: self.seq,
            joints: self.joints.clone(),
            links: fk.links,
            tip: fk.tip,
            backbone: Backbone::compute(&self.robot.tubes, &self.joints, self.backbone_ds)?,
        })
    }

    fn render_event(&self) -> Result<Arc<str>, ApiError> {
        let text = serde_json::to_string(&self.event()?).map_err(|e| ApiError::invalid(e.to_string()))?;
        Ok(Arc::from(text))
    }

    pub fn view(&self) -> Result<SessionView, ApiError> {
        let fk = forward_kinematics(&self.robot.tubes, &self.joints)?;
        Ok(SessionView {
            id: self.id.clone(),
            name: self.robot.name.clone(),
            seq: self.seq,
            backbone_ds: self.backbone_ds,
            tubes: self.robot.tubes.clone(),
            axes: self.robot.axis_map.clone(),
            joints: self.joints.clone(),
            controller: ControllerView {
                homed: self.controller.is_homed(),
                mode: self.controller.mode(),
                position: self.controller.position_report(),
                axes: self.controller.axes().to_vec(),
            },
            links: fk.links,
            tip: fk.tip,
            registration: self.registration.clone(),
        })
    }

    /// Moves to `target` through the G-code path. Nothing changes on error.
    pub fn command_joints(&mut self, target: JointConfig) -> Result<(String, Arc<str>), ApiError> {
        target.validate(&self.robot.tubes)?;
        let program = emit_move(&target, &self.robot.axis_map, Some(SERVICE_FEED))?;
        let mut controller = self.controller.clone();
        run_program(&mut controller, &program, &self.robot.axis_map)?;

        let previous = std::mem::replace(&mut self.joints, target);
        self.seq += 1;
        match self.render_event() {
            Ok(event) => {
                self.controller = controller;
                self.latest = Arc::clone(&event);
                self.subscribers.retain(|tx| tx.send(Arc::clone(&event)).is_ok());
                Ok((program, event))
            }
            Err(e) => {
                self.joints = previous;
                self.seq -= 1;
                Err(e)
            }
        }
    }

    /// Registers a stream listener; returns the latest event to send first.
    pub fn subscribe(&mut self) -> (Arc<str>, UnboundedReceiver<Arc<str>>) {
        let (tx, rx) = unbounded_channel();
        self.subscribers.push(tx);
        (Arc::clone(&self.latest), rx)
    }

    fn snapshot(&self) -> SessionSnapshot {
        SessionSnapshot {
            id: self.id.clone(),
            description: self.robot.to_description(),
            joints: self.joints.clone(),
            registration: self.registration.clone(),
        }
    }
}

fn run_program(controller: &mut ControllerState, program: &str, axis_map: &AxisMap) -> Result<(), ApiError> {
    for line in program.lines() {
        if let Some(cmd) = parse_line(line, axis_map)? {
            controller.apply(&cmd)?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SessionSnapshot {
    id: String,
    description: RobotDescriptionFile,
    joints: JointConfig,
    registration: Option<FrameRegistration>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct SnapshotFile {
    sessions: Vec<SessionSnapshot>,
}

pub type SessionHandle = Arc<Mutex<Session>>;

/// In-memory session table with optional JSON snapshot persistence.
pub struct SessionStore {
    sessions: RwLock<HashMap<String, SessionHandle>>,
    snapshot: Option<PathBuf>,
    pub backbone_ds: f64,
}

impl SessionStore {
    pub fn new(backbone_ds: f64, snapshot: Option<PathBuf>) -> Self {
        Self {
            sessions: RwLock::new(HashMap::new()),
            snapshot,
            backbone_ds,
        }
    }

    /// Restores sessions from the snapshot file if it exists.
    pub fn restore(&self) -> std::io::Result<usize> {
        let Some(path) = &self.snapshot else { return Ok(0) };
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(0),
            Err(e) => return Err(e),
        };
        let file: SnapshotFile =
            serde_json::from_str(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
        let mut restored = 0;
        for snap in file.sessions {
            let session = snap
                .description
                .build()
                .map_err(ApiError::from)
                .and_then(|robot| Session::start(snap.id.clone(), robot, self.backbone_ds))
                .and_then(|mut s| {
                    if s.joints != snap.joints {
                        s.command_joints(snap.joints)?;
                    }
                    s.registration = snap.registration;
                    Ok(s)
                });
            match session {
                Ok(s) => {
                    self.write_map().insert(snap.id, Arc::new(Mutex::new(s)));
                    restored += 1;
                }
                Err(e) => log::warn!("skipping snapshot session {}: {}", snap.id, e.message),
            }
        }
        Ok(restored)
    }

    fn write_map(&self) -> std::sync::RwLockWriteGuard<'_, HashMap<String, SessionHandle>> {
        self.sessions.write().unwrap_or_else(|p| p.into_inner())
    }

    pub fn insert(&self, session: Session) -> SessionHandle {
        let handle = Arc::new(Mutex::new(session));
        let id = lock(&handle).id.clone();
        self.write_map().insert(id, Arc::clone(&handle));
        self.persist();
        handle
    }

    pub fn get(&self, id: &str) -> Result<SessionHandle, ApiError> {
        self.sessions
            .read()
            .unwrap_or_else(|p| p.into_inner())
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(id))
    }

    pub fn remove(&self, id: &str) -> Result<(), ApiError> {
        self.write_map().remove(id).ok_or_else(|| ApiError::not_found(id))?;
        self.persist();
        Ok(())
    }

    pub fn ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self
            .sessions
            .read()
            .unwrap_or_else(|p| p.into_inner())
            .keys()
            .cloned()
            .collect();
        ids.sort();
        ids
    }

    /// Writes the snapshot file, if configured. Failures are logged only.
    pub fn persist(&self) {
        let Some(path) = &self.snapshot else { return };
        let handles: Vec<SessionHandle> = self
            .sessions
            .read()
            .unwrap_or_else(|p| p.into_inner())
            .values()
            .cloned()
            .collect();
        let mut sessions: Vec<SessionSnapshot> = handles.iter().map(|h| lock(h).snapshot()).collect();
        sessions.sort_by(|a, b| a.id.cmp(&b.id));
        let result = serde_json::to_string_pretty(&SnapshotFile { sessions })
            .map_err(std::io::Error::other)
            .and_then(|text| {
                let tmp = path.with_extension("tmp");
                std::fs::write(&tmp, text)?;
                std::fs::rename(&tmp, path)
            });
        if let Err(e) = result {
            log::warn!("snapshot to {} failed: {e}", path.display());
        }
    }
}

pub fn lock(handle: &SessionHandle) -> std::sync::MutexGuard<'_, Session> {
    handle.lock().unwrap_or_else(|p| p.into_inner())
}

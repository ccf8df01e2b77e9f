use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::ws::{CloseFrame, Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tokio::sync::mpsc::UnboundedReceiver;

use super::error::ApiError;
use super::session::{lock, Backbone, Session, SessionStore, StateEvent};
use crate::actuation::{run_accuracy_experiment_with, AccuracyReport, NoiseModel};
use crate::kinematics::{forward_kinematics, FkSolution, JointConfig};
use crate::metrology::{
    in_plane_experiment, out_of_plane_experiment, register_frames, tip_tracking_comparison, ExperimentRecord,
    FrameRegistration, PointPair,
};
use crate::robot_file::RobotDescriptionFile;

/// WebSocket close code sent for an unknown session.
pub const CLOSE_UNKNOWN_SESSION: u16 = 4404;
/// Largest accuracy run accepted over HTTP.
pub const MAX_ACCURACY_TRIALS: usize = 1_000_000;

pub type AppState = Arc<SessionStore>;

fn parse_json<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::malformed(e.to_string()))
}

fn parse_json_or_default<T: DeserializeOwned + Default>(body: &Bytes) -> Result<T, ApiError> {
    if body.iter().all(u8::is_ascii_whitespace) {
        Ok(T::default())
    } else {
        parse_json(body)
    }
}

pub async fn healthz() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

pub async fn openapi() -> Json<serde_json::Value> {
    Json(super::openapi::document())
}

#[derive(Serialize)]
pub struct Created {
    pub id: String,
    pub seq: u64,
}

pub async fn create_robot(
    State(store): State<AppState>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Response, ApiError> {
    let content_type = headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .unwrap_or("application/json")
        .to_ascii_lowercase();
    let description: RobotDescriptionFile = if content_type.contains("toml") || content_type.starts_with("text/plain") {
        let text = std::str::from_utf8(&body).map_err(|e| ApiError::malformed(e.to_string()))?;
        RobotDescriptionFile::parse(text)?
    } else {
        parse_json(&body)?
    };
    let robot = description.build()?;
    let id = uuid::Uuid::new_v4().to_string();
    let session = Session::start(id.clone(), robot, store.backbone_ds)?;
    let seq = session.seq();
    store.insert(session);
    log::info!("created session {id}");
    Ok((StatusCode::CREATED, Json(Created { id, seq })).into_response())
}

pub async fn list_robots(State(store): State<AppState>) -> Json<serde_json::Value> {
    Json(serde_json::json!({ "sessions": store.ids() }))
}

pub async fn get_robot(State(store): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let handle = store.get(&id)?;
    let view = lock(&handle).view()?;
    Ok(Json(view).into_response())
}

pub async fn delete_robot(State(store): State<AppState>, Path(id): Path<String>) -> Result<StatusCode, ApiError> {
    store.remove(&id)?;
    Ok(StatusCode::NO_CONTENT)
}

/// Joint targets; an omitted array keeps the current values.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointPatch {
    pub translations: Option<Vec<f64>>,
    pub rotations: Option<Vec<f64>>,
}

pub async fn patch_joints(
    State(store): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let handle = store.get(&id)?;
    let patch: JointPatch = parse_json(&body)?;
    let (gcode, event) = {
        let mut session = lock(&handle);
        let target = JointConfig::new(
            patch
                .translations
                .unwrap_or_else(|| session.joints.translations.clone()),
            patch.rotations.unwrap_or_else(|| session.joints.rotations.clone()),
        );
        session.command_joints(target)?
    };
    store.persist();
    // the event text is spliced in as-is so it matches the streamed copy byte for byte
    let gcode = serde_json::to_string(&gcode).map_err(|e| ApiError::invalid(e.to_string()))?;
    let body = format!("{{\"gcode\":{gcode},\"event\":{event}}}");
    Ok(([(header::CONTENT_TYPE, "application/json")], body).into_response())
}

pub async fn fk(
    State(store): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<FkSolution>, ApiError> {
    let handle = store.get(&id)?;
    let joints: JointConfig = parse_json(&body)?;
    let tubes = lock(&handle).robot.tubes.clone();
    Ok(Json(forward_kinematics(&tubes, &joints)?))
}

#[derive(Debug, Deserialize)]
pub struct BackboneQuery {
    pub ds: Option<f64>,
}

pub async fn backbone(
    State(store): State<AppState>,
    Path(id): Path<String>,
    Query(query): Query<BackboneQuery>,
) -> Result<Json<Backbone>, ApiError> {
    let handle = store.get(&id)?;
    let (tubes, joints, default_ds) = {
        let s = lock(&handle);
        (s.robot.tubes.clone(), s.joints.clone(), s.backbone_ds)
    };
    Ok(Json(Backbone::compute(
        &tubes,
        &joints,
        query.ds.unwrap_or(default_ds),
    )?))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InPlaneRequest {
    pub delta_translation: f64,
    pub joints: Option<JointConfig>,
    pub measured: Option<Vec<[f64; 3]>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutOfPlaneRequest {
    pub tube: u32,
    pub delta_rotation: f64,
    pub joints: Option<JointConfig>,
    pub measured: Option<Vec<[f64; 3]>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccuracyRequest {
    pub n: usize,
    pub seed: u64,
    #[serde(default)]
    pub noise: NoiseModel,
    #[serde(default)]
    pub include_trials: bool,
}

/// Registers the tracker when `pairs` is given, then compares `measured_tip`
/// (tracker frame) with the predicted tip when given.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackingRequest {
    pub pairs: Option<Vec<PointPair>>,
    pub measured_tip: Option<[f64; 3]>,
    pub joints: Option<JointConfig>,
}

#[derive(Debug, Serialize)]
pub struct TrackingResponse {
    pub registration: Option<FrameRegistration>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub record: Option<ExperimentRecord>,
}

fn attach(record: ExperimentRecord, measured: Option<Vec<[f64; 3]>>) -> Result<ExperimentRecord, ApiError> {
    match measured {
        Some(m) => Ok(record.with_measurements(m)?),
        None => Ok(record),
    }
}

pub async fn experiment(
    State(store): State<AppState>,
    Path((id, kind)): Path<(String, String)>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let handle = store.get(&id)?;
    let (tubes, joints, axis_map) = {
        let s = lock(&handle);
        (s.robot.tubes.clone(), s.joints.clone(), s.robot.axis_map.clone())
    };
    match kind.as_str() {
        "in-plane" => {
            let req: InPlaneRequest = parse_json(&body)?;
            let joints = req.joints.unwrap_or(joints);
            let record = in_plane_experiment(&tubes, &joints, req.delta_translation)?;
            Ok(Json(attach(record, req.measured)?).into_response())
        }
        "out-of-plane" => {
            let req: OutOfPlaneRequest = parse_json(&body)?;
            let joints = req.joints.unwrap_or(joints);
            let record = out_of_plane_experiment(&tubes, &joints, req.tube, req.delta_rotation)?;
            Ok(Json(attach(record, req.measured)?).into_response())
        }
        "accuracy" => {
            let req: AccuracyRequest = parse_json(&body)?;
            if req.n > MAX_ACCURACY_TRIALS {
                return Err(ApiError::invalid(format!("n must be at most {MAX_ACCURACY_TRIALS}")));
            }
            let mut report: AccuracyReport = tokio::task::spawn_blocking(move || {
                run_accuracy_experiment_with(&axis_map, req.n, req.seed, req.noise)
            })
            .await
            .map_err(|e| ApiError::invalid(e.to_string()))??;
            if !req.include_trials {
                report.trials.clear();
            }
            Ok(Json(report).into_response())
        }
        "tracking" => {
            let req: TrackingRequest = parse_json_or_default(&body)?;
            if let Some(pairs) = &req.pairs {
                let registration = register_frames(pairs)?;
                lock(&handle).registration = Some(registration);
                store.persist();
            }
            let registration = lock(&handle).registration.clone();
            let record = match req.measured_tip {
                Some(tip) => {
                    let joints = req.joints.unwrap_or(joints);
                    Some(tip_tracking_comparison(&tubes, &joints, registration.as_ref(), tip)?)
                }
                None => None,
            };
            Ok(Json(TrackingResponse { registration, record }).into_response())
        }
        other => Err(ApiError::new(
            StatusCode::NOT_FOUND,
            "unknown_experiment",
            format!("no experiment `{other}`; expected in-plane, out-of-plane, accuracy or tracking"),
        )),
    }
}

pub async fn events(ws: WebSocketUpgrade, State(store): State<AppState>, Path(id): Path<String>) -> Response {
    let subscription = store.get(&id).ok().map(|h| lock(&h).subscribe());
    ws.on_upgrade(move |socket| async move {
        match subscription {
            Some((latest, rx)) => stream_events(socket, latest, rx).await,
            None => {
                let mut socket = socket;
                let frame = CloseFrame {
                    code: CLOSE_UNKNOWN_SESSION,
                    reason: format!("unknown session {id}").into(),
                };
                let _ = socket.send(Message::Close(Some(frame))).await;
            }
        }
    })
}

async fn stream_events(mut socket: WebSocket, latest: Arc<str>, mut rx: UnboundedReceiver<Arc<str>>) {
    if socket.send(Message::Text(latest.as_ref().into())).await.is_err() {
        return;
    }
    loop {
        tokio::select! {
            event = rx.recv() => match event {
                Some(text) => {
                    if socket.send(Message::Text(text.as_ref().into())).await.is_err() {
                        return;
                    }
                }
                // session deleted
                None => {
                    let _ = socket.send(Message::Close(Some(CloseFrame {
                        code: CLOSE_UNKNOWN_SESSION,
                        reason: "session closed".into(),
                    }))).await;
                    return;
                }
            },
            incoming = socket.recv() => match incoming {
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => return,
                Some(Ok(_)) => {}
            },
        }
    }
}

/// Decodes a pushed event; handy for clients written in Rust.
pub fn decode_event(text: &str) -> serde_json::Result<StateEvent> {
    serde_json::from_str(text)
}

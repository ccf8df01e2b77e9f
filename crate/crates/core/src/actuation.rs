//! Virtual actuation unit: a firmware loop that consumes G-code, keeps every
//! motor axis on its step grid and reports positions, plus the randomized
//! positioning-accuracy experiment.

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gcode::{
    format_axis_words, parse_line, AxisAssignment, AxisKind, AxisMap, AxisSpec, CommandKind, GcodeCommand, GcodeError,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ActuationError {
    #[error("limit: axis {axis} target {value:.3} outside [{min:.3}, {max:.3}]")]
    Limit { axis: char, value: f64, min: f64, max: f64 },

    #[error("axis {0} is not homed")]
    NotHomed(char),

    #[error("unknown axis {0}")]
    UnknownAxis(char),

    #[error("invalid experiment: {0}")]
    InvalidExperiment(String),

    #[error(transparent)]
    Gcode(#[from] GcodeError),
}

/// Error added to tracker readings.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    #[default]
    None,
    Gaussian {
        /// mm
        sigma_translation: f64,
        /// degrees
        sigma_rotation: f64,
    },
    FixedOffset {
        translation: f64,
        rotation: f64,
    },
}

impl NoiseModel {
    fn validate(&self) -> Result<(), ActuationError> {
        let ok = match *self {
            NoiseModel::None => true,
            NoiseModel::Gaussian {
                sigma_translation,
                sigma_rotation,
            } => {
                sigma_translation >= 0.0
                    && sigma_rotation >= 0.0
                    && sigma_translation.is_finite()
                    && sigma_rotation.is_finite()
            }
            NoiseModel::FixedOffset { translation, rotation } => translation.is_finite() && rotation.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(ActuationError::InvalidExperiment(format!(
                "invalid noise model {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PositioningMode {
    Absolute,
    Relative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisState {
    pub letter: char,
    pub kind: AxisKind,
    pub tube: u32,
    pub steps_per_unit: f64,
    pub limits: [f64; 2],
    /// Last accepted target (mm or degrees).
    pub commanded: f64,
    /// Motor position in whole steps.
    pub steps: i64,
    pub homed: bool,
}

impl AxisState {
    fn from_spec(spec: AxisSpec) -> Self {
        Self {
            letter: spec.letter,
            kind: spec.kind,
            tube: spec.tube,
            steps_per_unit: spec.steps_per_unit,
            limits: spec.limits,
            commanded: 0.0,
            steps: 0,
            homed: false,
        }
    }

    pub fn actual(&self) -> f64 {
        self.steps as f64 / self.steps_per_unit
    }

    fn quantize(&self, value: f64) -> i64 {
        (value * self.steps_per_unit).round() as i64
    }

    /// Step indices whose positions lie inside the limits.
    pub fn step_range(&self) -> (i64, i64) {
        (
            (self.limits[0] * self.steps_per_unit).ceil() as i64,
            (self.limits[1] * self.steps_per_unit).floor() as i64,
        )
    }
}

/// State of the virtual motion board.
#[derive(Debug, Clone)]
pub struct ControllerState {
    axes: Vec<AxisState>,
    mode: PositioningMode,
    noise: NoiseModel,
    rng: ChaCha8Rng,
}

impl ControllerState {
    pub fn new(axis_map: &AxisMap) -> Self {
        Self::with_noise(axis_map, NoiseModel::None, 0)
    }

    pub fn with_noise(axis_map: &AxisMap, noise: NoiseModel, seed: u64) -> Self {
        Self {
            axes: axis_map.axes().map(AxisState::from_spec).collect(),
            mode: PositioningMode::Absolute,
            noise,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn axes(&self) -> &[AxisState] {
        &self.axes
    }

    pub fn axis(&self, letter: char) -> Option<&AxisState> {
        self.axes.iter().find(|a| a.letter == letter)
    }

    pub fn mode(&self) -> PositioningMode {
        self.mode
    }

    pub fn noise(&self) -> NoiseModel {
        self.noise
    }

    pub fn is_homed(&self) -> bool {
        self.axes.iter().all(|a| a.homed)
    }

    fn index_of(&self, letter: char) -> Result<usize, ActuationError> {
        self.axes
            .iter()
            .position(|a| a.letter == letter)
            .ok_or(ActuationError::UnknownAxis(letter))
    }

    /// Actual positions in emission format, e.g. `X10.000 A0.000`.
    pub fn position_report(&self) -> String {
        let values: Vec<(char, f64)> = self.axes.iter().map(|a| (a.letter, a.actual())).collect();
        format_axis_words(&values)
    }

    /// Executes one command. On error the state is left untouched.
    pub fn apply(&mut self, command: &GcodeCommand) -> Result<String, ActuationError> {
        match command.kind {
            CommandKind::AbsoluteMode => self.mode = PositioningMode::Absolute,
            CommandKind::RelativeMode => self.mode = PositioningMode::Relative,
            CommandKind::PositionQuery => return Ok(self.position_report()),
            CommandKind::Home => {
                let indices: Vec<usize> = if command.axis_words.is_empty() {
                    (0..self.axes.len()).collect()
                } else {
                    command
                        .axis_words
                        .keys()
                        .map(|&l| self.index_of(l))
                        .collect::<Result<_, _>>()?
                };
                for i in indices {
                    let axis = &mut self.axes[i];
                    axis.commanded = 0.0;
                    axis.steps = 0;
                    axis.homed = true;
                }
            }
            CommandKind::LinearMove => {
                let mut updates = Vec::with_capacity(command.axis_words.len());
                for (&letter, &value) in &command.axis_words {
                    let i = self.index_of(letter)?;
                    let axis = &self.axes[i];
                    if !axis.homed {
                        return Err(ActuationError::NotHomed(letter));
                    }
                    let target = match self.mode {
                        PositioningMode::Absolute => value,
                        PositioningMode::Relative => axis.commanded + value,
                    };
                    let [min, max] = axis.limits;
                    // the nearest step may sit up to half a step past a limit
                    let steps = axis.quantize(target);
                    if !(min..=max).contains(&target) {
                        return Err(ActuationError::Limit {
                            axis: letter,
                            value: target,
                            min,
                            max,
                        });
                    }
                    updates.push((i, target, steps));
                }
                for (i, target, steps) in updates {
                    self.axes[i].commanded = target;
                    self.axes[i].steps = steps;
                }
            }
        }
        Ok("ok".to_owned())
    }

    /// Parses and executes one line, returning the firmware reply: `ok`, the
    /// position report, or `error: ...`. Blank lines get no reply.
    pub fn handle_line(&mut self, line: &str, axis_map: &AxisMap) -> Option<String> {
        match parse_line(line, axis_map) {
            Ok(None) => None,
            Ok(Some(cmd)) => Some(match self.apply(&cmd) {
                Ok(reply) => reply,
                Err(e) => format!("error: {e}"),
            }),
            Err(e) => Some(format!("error: {e}")),
        }
    }

    /// Tracker reading of an axis: actual position plus measurement noise.
    pub fn measure(&mut self, letter: char) -> Result<f64, ActuationError> {
        let axis = &self.axes[self.index_of(letter)?];
        let actual = axis.actual();
        let kind = axis.kind;
        let error = match self.noise {
            NoiseModel::None => 0.0,
            NoiseModel::FixedOffset { translation, rotation } => match kind {
                AxisKind::Translation => translation,
                AxisKind::Rotation => rotation,
            },
            NoiseModel::Gaussian {
                sigma_translation,
                sigma_rotation,
            } => {
                let sigma = match kind {
                    AxisKind::Translation => sigma_translation,
                    AxisKind::Rotation => sigma_rotation,
                };
                if sigma == 0.0 {
                    0.0
                } else {
                    Normal::new(0.0, sigma).expect("sigma validated").sample(&mut self.rng)
                }
            }
        };
        Ok(actual + error)
    }
}

/// One commanded target and its tracker reading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyTrial {
    pub target_translation: f64,
    pub target_rotation: f64,
    pub measured_translation: f64,
    pub measured_rotation: f64,
    pub residual_translation: f64,
    pub residual_rotation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub n_trials: usize,
    pub seed: u64,
    pub noise: NoiseModel,
    /// mm
    pub rmse_translation: f64,
    /// degrees
    pub rmse_rotation: f64,
    pub trials: Vec<AccuracyTrial>,
}

pub fn rmse(residuals: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = residuals
        .into_iter()
        .fold((0.0, 0usize), |(s, n), r| (s + r * r, n + 1));
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).sqrt()
    }
}

/// Runs the positioning-accuracy experiment on a single cart with the
/// default axis assignment.
pub fn run_accuracy_experiment(n: usize, seed: u64, noise: NoiseModel) -> Result<AccuracyReport, ActuationError> {
    let map = AxisMap::new(vec![AxisAssignment::with_letters(1, 'X', 'A')])?;
    run_accuracy_experiment_with(&map, n, seed, noise)
}

/// Sends `n` random targets for the first cart of `axis_map` through the
/// G-code path and compares tracker readings with the targets.
///
/// Targets are drawn uniformly from the motor step positions inside each
/// axis' limits, so a noiseless run reproduces every target exactly.
pub fn run_accuracy_experiment_with(
    axis_map: &AxisMap,
    n: usize,
    seed: u64,
    noise: NoiseModel,
) -> Result<AccuracyReport, ActuationError> {
    if n == 0 {
        return Err(ActuationError::InvalidExperiment(
            "at least one trial is required".into(),
        ));
    }
    noise.validate()?;
    let cart = axis_map
        .assignments()
        .first()
        .ok_or_else(|| ActuationError::InvalidExperiment("axis map has no carts".into()))?;
    let (t_letter, r_letter) = (cart.translation, cart.rotation);

    let mut targets_rng = ChaCha8Rng::seed_from_u64(seed);
    let mut controller = ControllerState::with_noise(axis_map, noise, seed ^ 0x5DEE_CE66_D1CE_5EED);
    run_line(&mut controller, "G28", axis_map)?;
    run_line(&mut controller, "G90", axis_map)?;

    let t_axis = controller
        .axis(t_letter)
        .cloned()
        .ok_or(ActuationError::UnknownAxis(t_letter))?;
    let r_axis = controller
        .axis(r_letter)
        .cloned()
        .ok_or(ActuationError::UnknownAxis(r_letter))?;
    let draw = |rng: &mut ChaCha8Rng, axis: &AxisState| {
        let (lo, hi) = axis.step_range();
        rng.random_range(lo..=hi) as f64 / axis.steps_per_unit
    };

    let mut trials = Vec::with_capacity(n);
    for _ in 0..n {
        let target_translation = draw(&mut targets_rng, &t_axis);
        let target_rotation = draw(&mut targets_rng, &r_axis);
        let line = format!(
            "G1 {}",
            format_axis_words(&[(t_letter, target_translation), (r_letter, target_rotation)])
        );
        run_line(&mut controller, &line, axis_map)?;
        let measured_translation = controller.measure(t_letter)?;
        let measured_rotation = controller.measure(r_letter)?;
        trials.push(AccuracyTrial {
            target_translation,
            target_rotation,
            measured_translation,
            measured_rotation,
            residual_translation: measured_translation - target_translation,
            residual_rotation: measured_rotation - target_rotation,
        });
    }

    Ok(AccuracyReport {
        n_trials: n,
        seed,
        noise,
        rmse_translation: rmse(trials.iter().map(|t| t.residual_translation)),
        rmse_rotation: rmse(trials.iter().map(|t| t.residual_rotation)),
        trials,
    })
}

fn run_line(controller: &mut ControllerState, line: &str, axis_map: &AxisMap) -> Result<String, ActuationError> {
    let cmd = parse_line(line, axis_map)?
        .ok_or_else(|| ActuationError::InvalidExperiment(format!("empty command `{line}`")))?;
    controller.apply(&cmd)
}

/// Serves the firmware line protocol on `listener`: one reply line per
/// non-blank command line. Connections share one controller and are handled
/// on their own threads.
pub fn serve_tcp(
    listener: TcpListener,
    controller: Arc<Mutex<ControllerState>>,
    axis_map: AxisMap,
) -> std::io::Result<()> {
    let axis_map = Arc::new(axis_map);
    for stream in listener.incoming() {
        let stream = stream?;
        let controller = Arc::clone(&controller);
        let axis_map = Arc::clone(&axis_map);
        std::thread::spawn(move || {
            if let Err(e) = handle_connection(stream, &controller, &axis_map) {
                log::warn!("firmware connection closed: {e}");
            }
        });
    }
    Ok(())
}

fn handle_connection(
    stream: TcpStream,
    controller: &Mutex<ControllerState>,
    axis_map: &AxisMap,
) -> std::io::Result<()> {
    let mut writer = stream.try_clone()?;
    for line in BufReader::new(stream).lines() {
        let line = line?;
        let reply = controller
            .lock()
            .unwrap_or_else(|p| p.into_inner())
            .handle_line(&line, axis_map);
        if let Some(reply) = reply {
            writer.write_all(reply.as_bytes())?;
            writer.write_all(b"\n")?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single() -> (AxisMap, ControllerState) {
        let map = AxisMap::default_for(1).unwrap();
        let state = ControllerState::new(&map);
        (map, state)
    }

    fn run(state: &mut ControllerState, map: &AxisMap, line: &str) -> Result<String, ActuationError> {
        run_line(state, line, map)
    }

    #[test]
    fn move_after_home_is_exact() {
        let (map, mut s) = single();
        run(&mut s, &map, "G28").unwrap();
        run(&mut s, &map, "G1 X10.000").unwrap();
        let x = s.axis('X').unwrap();
        assert_eq!(x.steps, 8000);
        assert_eq!(x.actual(), 10.0);
    }

    #[test]
    fn quantization_within_half_step() {
        let (map, mut s) = single();
        run(&mut s, &map, "G28").unwrap();
        run(&mut s, &map, "G1 X10.0004").unwrap();
        let x = s.axis('X').unwrap();
        assert!((x.actual() - 10.0004).abs() <= 1.0 / 1600.0);
        assert_eq!(x.actual(), 10.0);
    }

    #[test]
    fn limit_error_leaves_state() {
        let (map, mut s) = single();
        run(&mut s, &map, "G28").unwrap();
        run(&mut s, &map, "G1 X5 A10").unwrap();
        let before = s.axes().to_vec();
        let err = run(&mut s, &map, "G1 X60.000 A20").unwrap_err();
        assert!(matches!(err, ActuationError::Limit { axis: 'X', .. }));
        assert_eq!(s.axes(), &before[..]);
        run(&mut s, &map, "G1 A180.000").unwrap();
        let a = s.axis('A').unwrap();
        assert_eq!(a.commanded, 180.0);
        assert_eq!(a.steps, 1600);
        assert!(run(&mut s, &map, "G1 A180.001").is_err());
    }

    #[test]
    fn requires_homing() {
        let (map, mut s) = single();
        assert_eq!(run(&mut s, &map, "G1 X1"), Err(ActuationError::NotHomed('X')));
        run(&mut s, &map, "G28 X0").unwrap();
        assert!(run(&mut s, &map, "G1 X1").is_ok());
        assert!(run(&mut s, &map, "G1 A1").is_err());
    }

    #[test]
    fn relative_moves_accumulate() {
        let (map, mut s) = single();
        run(&mut s, &map, "G28").unwrap();
        run(&mut s, &map, "G91").unwrap();
        run(&mut s, &map, "G1 X1.5 A-10").unwrap();
        run(&mut s, &map, "G1 X1.5 A-10").unwrap();
        assert_eq!(s.mode(), PositioningMode::Relative);
        assert_eq!(s.axis('X').unwrap().actual(), 3.0);
        assert!((s.axis('A').unwrap().commanded + 20.0).abs() < 1e-12);
        assert!(run(&mut s, &map, "G1 X-4").is_err());
    }

    #[test]
    fn position_query_and_line_replies() {
        let (map, mut s) = single();
        assert_eq!(s.handle_line("G28", &map).as_deref(), Some("ok"));
        assert_eq!(s.handle_line("G1 X12.5 A-45", &map).as_deref(), Some("ok"));
        assert_eq!(s.handle_line("M114", &map).as_deref(), Some("X12.500 A-45.005"));
        assert_eq!(s.handle_line("", &map), None);
        assert!(s
            .handle_line("G1 Q5", &map)
            .unwrap()
            .starts_with("error: unsupported command"));
        assert!(s.handle_line("G1 X99", &map).unwrap().starts_with("error: limit"));
    }

    #[test]
    fn noiseless_experiment_reproduces_targets() {
        let report = run_accuracy_experiment(90, 7, NoiseModel::None).unwrap();
        assert_eq!(report.n_trials, 90);
        assert!(report.rmse_translation < 1.0 / 1600.0);
        assert!(report.rmse_rotation < 0.5 / 8.888);
        for t in &report.trials {
            assert!((0.0..=50.0).contains(&t.target_translation));
            assert!((-180.0..=180.0).contains(&t.target_rotation));
        }
    }

    #[test]
    fn fixed_offset_experiment() {
        let noise = NoiseModel::FixedOffset {
            translation: 0.05,
            rotation: 0.0,
        };
        let report = run_accuracy_experiment(90, 3, noise).unwrap();
        assert!((report.rmse_translation - 0.05).abs() < 1e-12);
    }

    #[test]
    fn experiment_is_deterministic() {
        let noise = NoiseModel::Gaussian {
            sigma_translation: 0.1,
            sigma_rotation: 0.08,
        };
        assert_eq!(
            run_accuracy_experiment(50, 11, noise).unwrap(),
            run_accuracy_experiment(50, 11, noise).unwrap()
        );
        assert_ne!(
            run_accuracy_experiment(50, 11, noise).unwrap().rmse_translation,
            run_accuracy_experiment(50, 12, noise).unwrap().rmse_translation
        );
        assert!(run_accuracy_experiment(0, 1, noise).is_err());
    }

    #[test]
    fn tcp_firmware() {
        let map = AxisMap::default_for(1).unwrap();
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let controller = Arc::new(Mutex::new(ControllerState::new(&map)));
        std::thread::spawn(move || serve_tcp(listener, controller, map));

        let stream = TcpStream::connect(addr).unwrap();
        let mut writer = stream.try_clone().unwrap();
        let mut reader = BufReader::new(stream);
        writer.write_all(b"G28\n\nG1 X1.25\nM114\n").unwrap();
        let mut replies = Vec::new();
        for _ in 0..3 {
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            replies.push(line.trim_end().to_owned());
        }
        assert_eq!(replies, ["ok", "ok", "X1.250 A0.000"]);
    }
}

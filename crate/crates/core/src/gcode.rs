//! The G-code subset spoken by the actuation unit.
//!
//! Only five commands exist: `G90`/`G91` (absolute/relative mode), `G1`
//! (linear move), `G28` (home) and `M114` (position report). Axis words carry
//! tube translations in mm (cart coordinates) and rotations in degrees, always
//! printed with three decimals.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::JointConfig;

pub const DEFAULT_STEPS_PER_MM: f64 = 800.0;
pub const DEFAULT_STEPS_PER_DEGREE: f64 = 8.888;
pub const DEFAULT_TRANSLATION_LIMITS: [f64; 2] = [0.0, 50.0];
pub const DEFAULT_ROTATION_LIMITS: [f64; 2] = [-180.0, 180.0];

const DEFAULT_TRANSLATION_LETTERS: [char; 3] = ['X', 'Y', 'Z'];
const DEFAULT_ROTATION_LETTERS: [char; 3] = ['A', 'B', 'C'];
/// Letters with a fixed meaning in the dialect; never usable as axes.
const RESERVED_LETTERS: [char; 3] = ['G', 'M', 'F'];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GcodeError {
    #[error("unsupported command `{word}` in line: {line}")]
    UnsupportedCommand { line: String, word: String },

    #[error("parse error at column {column}: {message}")]
    Parse { column: usize, message: String },

    #[error("axis map: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    AbsoluteMode,
    RelativeMode,
    LinearMove,
    Home,
    PositionQuery,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GcodeCommand {
    pub kind: CommandKind,
    pub axis_words: BTreeMap<char, f64>,
    /// Feed rate in units/min.
    pub feed: Option<f64>,
}

impl GcodeCommand {
    pub fn new(kind: CommandKind) -> Self {
        Self {
            kind,
            axis_words: BTreeMap::new(),
            feed: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisKind {
    Translation,
    Rotation,
}

/// Motor assignment of one tube's cart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisAssignment {
    pub tube: u32,
    pub translation: char,
    pub rotation: char,
    pub steps_per_mm: f64,
    pub steps_per_degree: f64,
    /// Deployed length (mm) of the tube when its cart sits at axis position 0.
    pub offset: f64,
    pub translation_limits: [f64; 2],
    pub rotation_limits: [f64; 2],
}

impl AxisAssignment {
    pub fn with_letters(tube: u32, translation: char, rotation: char) -> Self {
        Self {
            tube,
            translation,
            rotation,
            steps_per_mm: DEFAULT_STEPS_PER_MM,
            steps_per_degree: DEFAULT_STEPS_PER_DEGREE,
            offset: 0.0,
            translation_limits: DEFAULT_TRANSLATION_LIMITS,
            rotation_limits: DEFAULT_ROTATION_LIMITS,
        }
    }
}

/// Flattened view of one motor axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisSpec {
    pub letter: char,
    pub kind: AxisKind,
    pub tube: u32,
    pub steps_per_unit: f64,
    pub limits: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AxisMap {
    assignments: Vec<AxisAssignment>,
}

impl AxisMap {
    pub fn new(assignments: Vec<AxisAssignment>) -> Result<Self, GcodeError> {
        let map = Self { assignments };
        map.validate()?;
        Ok(map)
    }

    /// X/Y/Z translation and A/B/C rotation for up to three tubes.
    pub fn default_for(tube_count: usize) -> Result<Self, GcodeError> {
        if tube_count > DEFAULT_TRANSLATION_LETTERS.len() {
            return Err(GcodeError::Config(format!(
                "no default axis letters for {tube_count} tubes; declare the axes explicitly"
            )));
        }
        Self::new(
            (0..tube_count)
                .map(|i| {
                    AxisAssignment::with_letters(
                        i as u32 + 1,
                        DEFAULT_TRANSLATION_LETTERS[i],
                        DEFAULT_ROTATION_LETTERS[i],
                    )
                })
                .collect(),
        )
    }

    pub fn assignments(&self) -> &[AxisAssignment] {
        &self.assignments
    }

    pub fn tube_count(&self) -> usize {
        self.assignments.len()
    }

    /// Motor axes in emission order: translation then rotation, tube by tube.
    pub fn axes(&self) -> impl Iterator<Item = AxisSpec> + '_ {
        self.assignments.iter().flat_map(|a| {
            [
                AxisSpec {
                    letter: a.translation,
                    kind: AxisKind::Translation,
                    tube: a.tube,
                    steps_per_unit: a.steps_per_mm,
                    limits: a.translation_limits,
                },
                AxisSpec {
                    letter: a.rotation,
                    kind: AxisKind::Rotation,
                    tube: a.tube,
                    steps_per_unit: a.steps_per_degree,
                    limits: a.rotation_limits,
                },
            ]
        })
    }

    pub fn axis(&self, letter: char) -> Option<AxisSpec> {
        self.axes().find(|a| a.letter == letter)
    }

    pub fn contains(&self, letter: char) -> bool {
        self.axis(letter).is_some()
    }

    pub fn validate(&self) -> Result<(), GcodeError> {
        let mut seen = Vec::new();
        for (i, a) in self.assignments.iter().enumerate() {
            if a.tube as usize != i + 1 {
                return Err(GcodeError::Config(format!(
                    "axis entries must list tubes 1..={} in order, found tube {} at position {}",
                    self.assignments.len(),
                    a.tube,
                    i + 1
                )));
            }
            for letter in [a.translation, a.rotation] {
                if !letter.is_ascii_uppercase() || RESERVED_LETTERS.contains(&letter) {
                    return Err(GcodeError::Config(format!(
                        "`{letter}` cannot be used as an axis letter"
                    )));
                }
                if seen.contains(&letter) {
                    return Err(GcodeError::Config(format!("axis letter `{letter}` assigned twice")));
                }
                seen.push(letter);
            }
            if !(a.steps_per_mm > 0.0 && a.steps_per_degree > 0.0)
                || !a.steps_per_mm.is_finite()
                || !a.steps_per_degree.is_finite()
            {
                return Err(GcodeError::Config(format!(
                    "tube {}: steps ratios must be positive",
                    a.tube
                )));
            }
            for limits in [a.translation_limits, a.rotation_limits] {
                if limits[0].is_nan() || limits[1].is_nan() || limits[0] > limits[1] {
                    return Err(GcodeError::Config(format!(
                        "tube {}: limits [{}, {}] are reversed",
                        a.tube, limits[0], limits[1]
                    )));
                }
            }
            if !a.offset.is_finite() {
                return Err(GcodeError::Config(format!("tube {}: offset must be finite", a.tube)));
            }
        }
        Ok(())
    }

    /// Axis values `(letter, value)` for a joint target, in emission order.
    pub fn axis_values(&self, joints: &JointConfig) -> Result<Vec<(char, f64)>, GcodeError> {
        let n = joints.len();
        if joints.rotations.len() != n {
            return Err(GcodeError::Config("translation and rotation counts differ".into()));
        }
        if self.assignments.len() < n {
            return Err(GcodeError::Config(format!(
                "no axis letters configured for tube {}",
                self.assignments.len() + 1
            )));
        }
        Ok(self
            .assignments
            .iter()
            .zip(joints.translations.iter().zip(&joints.rotations))
            .flat_map(|(a, (&rho, &theta))| [(a.translation, rho - a.offset), (a.rotation, theta)])
            .collect())
    }

    /// Joint configuration with every axis at its home position (cart at
    /// zero, deployed length equal to the offset).
    pub fn home_configuration(&self) -> JointConfig {
        JointConfig::new(
            self.assignments.iter().map(|a| a.offset).collect(),
            vec![0.0; self.assignments.len()],
        )
    }

    /// Rebuilds a joint configuration from axis values, keeping `base` for
    /// any axis without a word.
    pub fn joints_from_axes(&self, words: &BTreeMap<char, f64>, base: &JointConfig) -> JointConfig {
        let mut joints = base.clone();
        for (i, a) in self.assignments.iter().enumerate().take(joints.len()) {
            if let Some(&v) = words.get(&a.translation) {
                joints.translations[i] = v + a.offset;
            }
            if let Some(&v) = words.get(&a.rotation) {
                joints.rotations[i] = v;
            }
        }
        joints
    }
}

/// Fixed three-decimal rendering, never printing a negative zero.
pub fn format_value(value: f64) -> String {
    let s = format!("{value:.3}");
    if s == "-0.000" {
        "0.000".to_owned()
    } else {
        s
    }
}

fn format_feed(feed: f64) -> String {
    if feed.fract() == 0.0 && feed.abs() < 1e15 {
        format!("{}", feed as i64)
    } else {
        let s = format_value(feed);
        s.trim_end_matches('0').trim_end_matches('.').to_owned()
    }
}

/// Axis words in emission form, e.g. `X10.000 A90.000`.
pub fn format_axis_words(values: &[(char, f64)]) -> String {
    let mut out = String::new();
    for (i, (letter, value)) in values.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{letter}{}", format_value(*value));
    }
    out
}

/// Absolute move to `target`: a `G90` line followed by one `G1` line.
pub fn emit_move(target: &JointConfig, axis_map: &AxisMap, feed: Option<f64>) -> Result<String, GcodeError> {
    let values = axis_map.axis_values(target)?;
    let mut out = String::from("G90\nG1 ");
    out.push_str(&format_axis_words(&values));
    if let Some(feed) = feed {
        let _ = write!(out, " F{}", format_feed(feed));
    }
    out.push('\n');
    Ok(out)
}

/// Splits a number token: optional sign, digits, optional fraction.
fn scan_number(bytes: &[u8], start: usize) -> usize {
    let mut i = start;
    if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
        i += 1;
    }
    while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
        i += 1;
    }
    i
}

fn parse_number(token: &str, column: usize) -> Result<f64, GcodeError> {
    let body = token.trim_start_matches(['+', '-']);
    let valid = !body.is_empty()
        && body.bytes().filter(|&b| b == b'.').count() <= 1
        && body.bytes().any(|b| b.is_ascii_digit())
        && token.len() - body.len() <= 1;
    if !valid {
        return Err(GcodeError::Parse {
            column,
            message: format!("malformed number `{token}`"),
        });
    }
    token.parse::<f64>().map_err(|e| GcodeError::Parse {
        column,
        message: format!("malformed number `{token}`: {e}"),
    })
}

/// Parses one line. Blank and comment-only lines yield `Ok(None)`.
///
/// Letters are case-insensitive and anything after `;` is ignored. Axis
/// letters must exist in `axis_map`. Columns in errors are 1-based.
pub fn parse_line(text: &str, axis_map: &AxisMap) -> Result<Option<GcodeCommand>, GcodeError> {
    let code = text.split(';').next().unwrap_or("");
    let line = text.trim_end_matches(['\r', '\n']).to_owned();
    let unsupported = |word: &str| GcodeError::UnsupportedCommand {
        line: line.clone(),
        word: word.to_owned(),
    };

    let bytes = code.as_bytes();
    let mut words: Vec<(char, f64, &str, usize)> = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        if b.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let column = i + 1;
        if !b.is_ascii_alphabetic() {
            let ch = code[i..].chars().next().unwrap_or('?');
            return Err(GcodeError::Parse {
                column,
                message: format!("expected a letter, found `{ch}`"),
            });
        }
        let letter = (b as char).to_ascii_uppercase();
        let end = scan_number(bytes, i + 1);
        let token = &code[i + 1..end];
        // a letter glued to another letter or stray character is not a word
        if end < bytes.len() && !bytes[end].is_ascii_whitespace() && !bytes[end].is_ascii_alphabetic() {
            let stop = code[end..]
                .find(|c: char| c.is_ascii_whitespace())
                .map_or(code.len(), |p| end + p);
            return Err(GcodeError::Parse {
                column: i + 2,
                message: format!("malformed number `{}`", &code[i + 1..stop]),
            });
        }
        if token.is_empty() {
            return Err(GcodeError::Parse {
                column: i + 2,
                message: format!("word `{letter}` has no value"),
            });
        }
        let value = parse_number(token, i + 2)?;
        words.push((letter, value, &code[i..end], column));
        i = end;
    }

    let Some(&(letter, value, word, _)) = words.first() else {
        return Ok(None);
    };

    let kind = match (letter, value) {
        ('G', 90.0) => CommandKind::AbsoluteMode,
        ('G', 91.0) => CommandKind::RelativeMode,
        ('G', 1.0) => CommandKind::LinearMove,
        ('G', 28.0) => CommandKind::Home,
        ('M', 114.0) => CommandKind::PositionQuery,
        _ => return Err(unsupported(word)),
    };

    let mut command = GcodeCommand::new(kind);
    for &(letter, value, word, column) in &words[1..] {
        match (letter, kind) {
            ('F', CommandKind::LinearMove) => {
                if command.feed.replace(value).is_some() {
                    return Err(GcodeError::Parse {
                        column,
                        message: "feed given twice".into(),
                    });
                }
            }
            (_, CommandKind::LinearMove | CommandKind::Home) if axis_map.contains(letter) => {
                if command.axis_words.insert(letter, value).is_some() {
                    return Err(GcodeError::Parse {
                        column,
                        message: format!("axis `{letter}` given twice"),
                    });
                }
            }
            _ => return Err(unsupported(word)),
        }
    }

    if kind == CommandKind::LinearMove && command.axis_words.is_empty() {
        return Err(GcodeError::Parse {
            column: 1,
            message: "G1 requires at least one axis word".into(),
        });
    }
    Ok(Some(command))
}

/// Parses every non-blank line of a program.
pub fn parse_program(text: &str, axis_map: &AxisMap) -> Result<Vec<GcodeCommand>, GcodeError> {
    text.lines()
        .filter_map(|line| parse_line(line, axis_map).transpose())
        .collect()
}

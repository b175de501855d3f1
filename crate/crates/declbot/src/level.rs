//! The `.level.json` document: schema, loading, saving and conversion to a
//! [`World`].

use std::collections::BTreeMap;
use std::fmt;

use declbot_core::geometry::{Segment, Vec2};
use declbot_core::simcore::{
    Area, AreaMode, AreaState, Beacon, MemoryAccess, PhysicsConfig, RobotState, SensorConfig,
    WinCondition, WinRobots, World, DEFAULT_MAX_STEPS,
};
use serde::{Deserialize, Serialize};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelDocument {
    pub format_version: u32,
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub bounds: Bounds,
    #[serde(default)]
    pub physics: Physics,
    #[serde(default)]
    pub sensor: Sensor,
    #[serde(default)]
    pub memory_access: MemoryPolicy,
    #[serde(default)]
    pub walls: Vec<WallDoc>,
    #[serde(default)]
    pub robots: Vec<RobotDoc>,
    #[serde(default)]
    pub beacons: Vec<BeaconDoc>,
    #[serde(default)]
    pub areas: Vec<AreaDoc>,
    #[serde(default)]
    pub win: Vec<WinDoc>,
    #[serde(default = "default_max_steps")]
    pub max_steps: u64,
    /// What a headless run of the level's reference program achieves.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<Expected>,
}

fn default_max_steps() -> u64 {
    DEFAULT_MAX_STEPS
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Physics {
    pub v_max: f64,
    pub axle_width: f64,
    pub dt: f64,
    pub robot_radius: f64,
    pub engine_limit: f64,
}

impl Default for Physics {
    fn default() -> Self {
        let p = PhysicsConfig::default();
        Physics {
            v_max: p.v_max,
            axle_width: p.axle_width,
            dt: p.dt,
            robot_radius: p.robot_radius,
            engine_limit: p.engine_limit,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Sensor {
    pub ray_count: usize,
    pub range: f64,
    pub beacon_radius: f64,
}

impl Default for Sensor {
    fn default() -> Self {
        let s = SensorConfig::default();
        Sensor {
            ray_count: s.ray_count,
            range: s.range,
            beacon_radius: s.beacon_radius,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    #[default]
    Own,
    All,
}

/// `"own"`, `"all"`, or a map from reader to the robots it may read.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MemoryPolicy {
    Policy(Policy),
    Explicit(BTreeMap<String, Vec<String>>),
}

impl Default for MemoryPolicy {
    fn default() -> Self {
        MemoryPolicy::Policy(Policy::Own)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WallDoc {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotDoc {
    pub name: String,
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub heading: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeaconDoc {
    pub label: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AreaModeDoc {
    WhileDetected,
    LatchToggle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AreaStateDoc {
    Accessible,
    Restricted,
}

impl From<AreaModeDoc> for AreaMode {
    fn from(m: AreaModeDoc) -> Self {
        match m {
            AreaModeDoc::WhileDetected => AreaMode::WhileDetected,
            AreaModeDoc::LatchToggle => AreaMode::LatchToggle,
        }
    }
}

impl From<AreaStateDoc> for AreaState {
    fn from(s: AreaStateDoc) -> Self {
        match s {
            AreaStateDoc::Accessible => AreaState::Accessible,
            AreaStateDoc::Restricted => AreaState::Restricted,
        }
    }
}

fn restricted() -> AreaStateDoc {
    AreaStateDoc::Restricted
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AreaDoc {
    pub id: String,
    pub x: f64,
    pub y: f64,
    pub radius: f64,
    pub trigger_beacon: String,
    pub mode: AreaModeDoc,
    /// Initial state.
    #[serde(default = "restricted")]
    pub state: AreaStateDoc,
    #[serde(default)]
    pub color: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllRobots {
    All,
}

/// `"all"` or a list of robot names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WinRobotsDoc {
    All(AllRobots),
    Named(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WinDoc {
    pub x: f64,
    pub y: f64,
    pub radius: f64,
    pub robots: WinRobotsDoc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expected {
    pub win_by_step: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LevelError {
    /// Malformed JSON or a field of the wrong shape.
    Schema {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    /// Well-formed but violates a world invariant.
    Invalid(Vec<String>),
}

impl fmt::Display for LevelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LevelError::Schema {
                path,
                line,
                column,
                message,
            } => write!(f, "{line}:{column}: at `{path}`: {message}"),
            LevelError::Invalid(problems) => {
                for (i, p) in problems.iter().enumerate() {
                    if i > 0 {
                        f.write_str("\n")?;
                    }
                    write!(f, "invalid level: {p}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for LevelError {}

/// Parses and validates a level; omitted optional fields take their defaults.
pub fn load_level(text: &str) -> Result<LevelDocument, LevelError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: LevelDocument = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        LevelError::Schema {
            path,
            line: inner.line(),
            column: inner.column(),
            message: strip_position(&inner.to_string()),
        }
    })?;
    doc.validate()?;
    Ok(doc)
}

/// serde_json appends " at line L column C"; the position is kept separately.
fn strip_position(message: &str) -> String {
    match message.rfind(" at line ") {
        Some(i) => message[..i].to_string(),
        None => message.to_string(),
    }
}

/// The canonical text of a document.
pub fn save_level(doc: &LevelDocument) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("level documents always serialize");
    s.push('\n');
    s
}

impl LevelDocument {
    /// A document with only bounds set.
    pub fn empty(name: impl Into<String>, width: f64, height: f64) -> Self {
        LevelDocument {
            format_version: FORMAT_VERSION,
            name: name.into(),
            description: String::new(),
            bounds: Bounds { width, height },
            physics: Physics::default(),
            sensor: Sensor::default(),
            memory_access: MemoryPolicy::default(),
            walls: Vec::new(),
            robots: Vec::new(),
            beacons: Vec::new(),
            areas: Vec::new(),
            win: Vec::new(),
            max_steps: DEFAULT_MAX_STEPS,
            expected: None,
        }
    }

    pub fn validate(&self) -> Result<(), LevelError> {
        let mut problems = Vec::new();
        if self.format_version != FORMAT_VERSION {
            problems.push(format!(
                "unsupported format_version {} (expected {FORMAT_VERSION})",
                self.format_version
            ));
        }
        if self.name.is_empty() {
            problems.push("name must not be empty".into());
        }
        for r in &self.robots {
            if r.name.is_empty() {
                problems.push("robot name must not be empty".into());
            }
        }
        if let Some(e) = self.expected {
            if e.win_by_step > self.max_steps {
                problems.push(format!(
                    "expected.win_by_step {} exceeds max_steps {}",
                    e.win_by_step, self.max_steps
                ));
            }
        }
        if problems.is_empty() {
            self.to_world().validate().map_err(LevelError::Invalid)
        } else {
            Err(LevelError::Invalid(problems))
        }
    }

    /// The initial world this document describes. Robots are sorted by name.
    pub fn to_world(&self) -> World {
        let mut w = World::new(self.bounds.width, self.bounds.height);
        let p = &self.physics;
        w.physics = PhysicsConfig {
            v_max: p.v_max,
            axle_width: p.axle_width,
            dt: p.dt,
            robot_radius: p.robot_radius,
            engine_limit: p.engine_limit,
        };
        w.sensor = SensorConfig {
            ray_count: self.sensor.ray_count,
            range: self.sensor.range,
            beacon_radius: self.sensor.beacon_radius,
        };
        w.memory_access = match &self.memory_access {
            MemoryPolicy::Policy(Policy::Own) => MemoryAccess::Own,
            MemoryPolicy::Policy(Policy::All) => MemoryAccess::All,
            MemoryPolicy::Explicit(map) => MemoryAccess::Explicit(map.clone()),
        };
        w.walls = self
            .walls
            .iter()
            .map(|s| Segment::new(Vec2::new(s.x1, s.y1), Vec2::new(s.x2, s.y2)))
            .collect();
        w.robots = self
            .robots
            .iter()
            .map(|r| RobotState::new(r.name.clone(), r.x, r.y, r.heading))
            .collect();
        w.sort_robots();
        w.beacons = self
            .beacons
            .iter()
            .map(|b| Beacon {
                label: b.label.clone(),
                pos: Vec2::new(b.x, b.y),
            })
            .collect();
        w.areas = self
            .areas
            .iter()
            .map(|a| {
                let mut area = Area::new(
                    a.id.clone(),
                    Vec2::new(a.x, a.y),
                    a.radius,
                    a.trigger_beacon.clone(),
                    a.mode.into(),
                    a.state.into(),
                );
                area.color = a.color.clone();
                area
            })
            .collect();
        w.win_conditions = self
            .win
            .iter()
            .map(|c| WinCondition {
                center: Vec2::new(c.x, c.y),
                radius: c.radius,
                robots: match &c.robots {
                    WinRobotsDoc::All(_) => WinRobots::All,
                    WinRobotsDoc::Named(names) => WinRobots::Named(names.clone()),
                },
            })
            .collect();
        w.max_steps = self.max_steps;
        w
    }
}

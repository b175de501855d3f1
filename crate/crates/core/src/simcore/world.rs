use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::engine::{normalize_angle, Desire};
use crate::geometry::{point_segment_distance, Segment, Vec2};
use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicsConfig {
    pub v_max: f64,
    pub axle_width: f64,
    pub dt: f64,
    pub robot_radius: f64,
    pub engine_limit: f64,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        PhysicsConfig {
            v_max: 1.0,
            axle_width: 0.5,
            dt: 0.1,
            robot_radius: 0.25,
            engine_limit: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorConfig {
    pub ray_count: usize,
    pub range: f64,
    pub beacon_radius: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        SensorConfig {
            ray_count: 16,
            range: 6.0,
            beacon_radius: 0.2,
        }
    }
}

pub const DEFAULT_MAX_STEPS: u64 = 2000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub pos: Vec2,
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Pose {
            pos: Vec2::new(x, y),
            heading,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Beacon {
    pub label: String,
    pub pos: Vec2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AreaMode {
    WhileDetected,
    LatchToggle,
}

impl AreaMode {
    pub fn as_str(self) -> &'static str {
        match self {
            AreaMode::WhileDetected => "while_detected",
            AreaMode::LatchToggle => "latch_toggle",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AreaState {
    Accessible,
    Restricted,
}

impl AreaState {
    pub fn as_str(self) -> &'static str {
        match self {
            AreaState::Accessible => "accessible",
            AreaState::Restricted => "restricted",
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            AreaState::Accessible => AreaState::Restricted,
            AreaState::Restricted => AreaState::Accessible,
        }
    }
}

/// A circular region that blocks robots and radar while restricted.
#[derive(Debug, Clone, PartialEq)]
pub struct Area {
    pub id: String,
    pub center: Vec2,
    pub radius: f64,
    pub trigger_beacon: String,
    pub mode: AreaMode,
    pub state: AreaState,
    pub color: String,
    /// The state the area's rule asks for. Differs from `state` while a
    /// robot inside keeps the area from closing.
    pub target: AreaState,
    /// Whether the trigger beacon was seen in the previous round.
    pub detected: bool,
}

impl Area {
    pub fn new(
        id: impl Into<String>,
        center: Vec2,
        radius: f64,
        trigger_beacon: impl Into<String>,
        mode: AreaMode,
        state: AreaState,
    ) -> Self {
        Area {
            id: id.into(),
            center,
            radius,
            trigger_beacon: trigger_beacon.into(),
            mode,
            state,
            color: String::new(),
            target: state,
            detected: false,
        }
    }

    pub fn is_restricted(&self) -> bool {
        self.state == AreaState::Restricted
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotState {
    pub name: String,
    pub pose: Pose,
    pub memory: Value,
    pub last_desire: Desire,
    pub last_error: Option<String>,
    pub last_warning: Option<String>,
}

impl RobotState {
    pub fn new(name: impl Into<String>, x: f64, y: f64, heading: f64) -> Self {
        RobotState {
            name: name.into(),
            pose: Pose::new(x, y, normalize_angle(heading)),
            memory: Value::Null,
            last_desire: Desire::ZERO,
            last_error: None,
            last_warning: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WinRobots {
    All,
    Named(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct WinCondition {
    pub center: Vec2,
    pub radius: f64,
    pub robots: WinRobots,
}

/// Whose memory rows each robot may read. A robot always reads its own.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum MemoryAccess {
    #[default]
    Own,
    All,
    Explicit(BTreeMap<String, Vec<String>>),
}

impl MemoryAccess {
    pub fn can_read(&self, reader: &str, owner: &str) -> bool {
        reader == owner
            || match self {
                MemoryAccess::Own => false,
                MemoryAccess::All => true,
                MemoryAccess::Explicit(map) => map
                    .get(reader)
                    .is_some_and(|names| names.iter().any(|n| n == owner)),
            }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Running,
    Won(u64),
    StepLimitReached,
}

impl Status {
    pub fn is_running(self) -> bool {
        self == Status::Running
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub width: f64,
    pub height: f64,
    pub walls: Vec<Segment>,
    pub beacons: Vec<Beacon>,
    pub areas: Vec<Area>,
    /// Sorted by name.
    pub robots: Vec<RobotState>,
    pub win_conditions: Vec<WinCondition>,
    pub physics: PhysicsConfig,
    pub sensor: SensorConfig,
    pub memory_access: MemoryAccess,
    pub step: u64,
    pub max_steps: u64,
    pub status: Status,
}

impl World {
    pub fn new(width: f64, height: f64) -> Self {
        World {
            width,
            height,
            walls: Vec::new(),
            beacons: Vec::new(),
            areas: Vec::new(),
            robots: Vec::new(),
            win_conditions: Vec::new(),
            physics: PhysicsConfig::default(),
            sensor: SensorConfig::default(),
            memory_access: MemoryAccess::Own,
            step: 0,
            max_steps: DEFAULT_MAX_STEPS,
            status: Status::Running,
        }
    }

    /// The four edges of the arena.
    pub fn bounds_edges(&self) -> [Segment; 4] {
        let (w, h) = (self.width, self.height);
        let c = [
            Vec2::new(0.0, 0.0),
            Vec2::new(w, 0.0),
            Vec2::new(w, h),
            Vec2::new(0.0, h),
        ];
        [
            Segment::new(c[0], c[1]),
            Segment::new(c[1], c[2]),
            Segment::new(c[2], c[3]),
            Segment::new(c[3], c[0]),
        ]
    }

    pub fn robot(&self, name: &str) -> Option<&RobotState> {
        self.robots.iter().find(|r| r.name == name)
    }

    pub fn robot_index(&self, name: &str) -> Option<usize> {
        self.robots.iter().position(|r| r.name == name)
    }

    pub fn sort_robots(&mut self) {
        self.robots.sort_by(|a, b| a.name.cmp(&b.name));
    }

    pub fn inside_bounds(&self, p: Vec2) -> bool {
        (0.0..=self.width).contains(&p.x) && (0.0..=self.height).contains(&p.y)
    }

    /// Checks the structural invariants; returns every problem found.
    pub fn validate(&self) -> Result<(), Vec<String>> {
        let mut errs = Vec::new();
        let positive = |name: &str, x: f64, errs: &mut Vec<String>| {
            if !(x.is_finite() && x > 0.0) {
                errs.push(format!("{name} must be a positive number, got {x}"));
            }
        };
        positive("width", self.width, &mut errs);
        positive("height", self.height, &mut errs);
        let p = &self.physics;
        positive("physics.v_max", p.v_max, &mut errs);
        positive("physics.axle_width", p.axle_width, &mut errs);
        positive("physics.dt", p.dt, &mut errs);
        positive("physics.robot_radius", p.robot_radius, &mut errs);
        positive("physics.engine_limit", p.engine_limit, &mut errs);
        positive("sensor.range", self.sensor.range, &mut errs);
        positive("sensor.beacon_radius", self.sensor.beacon_radius, &mut errs);
        if self.sensor.ray_count < 4 {
            errs.push(format!(
                "sensor.ray_count must be at least 4, got {}",
                self.sensor.ray_count
            ));
        }
        if self.max_steps == 0 {
            errs.push("max_steps must be positive".into());
        }

        let mut names = BTreeSet::new();
        for r in &self.robots {
            if !names.insert(r.name.as_str()) {
                errs.push(format!("duplicate robot name `{}`", r.name));
            }
            if !self.inside_bounds(r.pose.pos) {
                errs.push(format!("robot `{}` is outside the bounds", r.name));
            }
            if !r.pose.heading.is_finite() {
                errs.push(format!("robot `{}` has a non-finite heading", r.name));
            }
        }
        if self.robots.windows(2).any(|w| w[0].name > w[1].name) {
            errs.push("robots must be sorted by name".into());
        }
        let mut labels = BTreeSet::new();
        for b in &self.beacons {
            if !labels.insert(b.label.as_str()) {
                errs.push(format!("duplicate beacon label `{}`", b.label));
            }
            if !self.inside_bounds(b.pos) {
                errs.push(format!("beacon `{}` is outside the bounds", b.label));
            }
        }
        let mut ids = BTreeSet::new();
        for a in &self.areas {
            if !ids.insert(a.id.as_str()) {
                errs.push(format!("duplicate area id `{}`", a.id));
            }
            if !labels.contains(a.trigger_beacon.as_str()) {
                errs.push(format!(
                    "area `{}` is triggered by unknown beacon `{}`",
                    a.id, a.trigger_beacon
                ));
            }
            positive(&format!("area `{}` radius", a.id), a.radius, &mut errs);
            if !self.inside_bounds(a.center) {
                errs.push(format!("area `{}` is outside the bounds", a.id));
            }
        }
        for w in &self.walls {
            if !self.inside_bounds(w.a) || !self.inside_bounds(w.b) {
                errs.push(format!(
                    "wall ({}, {})-({}, {}) is outside the bounds",
                    w.a.x, w.a.y, w.b.x, w.b.y
                ));
            }
        }
        for (i, c) in self.win_conditions.iter().enumerate() {
            positive(&format!("win condition {i} radius"), c.radius, &mut errs);
            if let WinRobots::Named(list) = &c.robots {
                if list.is_empty() {
                    errs.push(format!("win condition {i} lists no robots"));
                }
                for n in list {
                    if !names.contains(n.as_str()) {
                        errs.push(format!("win condition {i} names unknown robot `{n}`"));
                    }
                }
            }
        }
        if let MemoryAccess::Explicit(map) = &self.memory_access {
            for (reader, owners) in map {
                for n in core::iter::once(reader).chain(owners) {
                    if !names.contains(n.as_str()) {
                        errs.push(format!("memory_access names unknown robot `{n}`"));
                    }
                }
            }
        }
        if errs.is_empty() {
            for r in &self.robots {
                for problem in self.clearance_problems(r.pose.pos, &r.name, 0.0) {
                    errs.push(format!("robot `{}` starts {problem}", r.name));
                }
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }

    /// Everything the disc of robot `name` centered at `p` overlaps by more
    /// than `tolerance`.
    pub fn clearance_problems(&self, p: Vec2, name: &str, tolerance: f64) -> Vec<String> {
        let r = self.physics.robot_radius;
        let mut out = Vec::new();
        for w in &self.walls {
            let d = point_segment_distance(p, *w);
            if d < r - tolerance {
                out.push(format!(
                    "{d} from wall ({}, {})-({}, {})",
                    w.a.x, w.a.y, w.b.x, w.b.y
                ));
            }
        }
        for e in self.bounds_edges() {
            let d = point_segment_distance(p, e);
            if d < r - tolerance || !self.inside_bounds(p) {
                out.push(format!("{d} from the bounds"));
            }
        }
        for a in self.areas.iter().filter(|a| a.is_restricted()) {
            let d = p.distance(a.center) - a.radius;
            if d < r - tolerance {
                out.push(format!("{d} from restricted area `{}`", a.id));
            }
        }
        for o in self.robots.iter().filter(|o| o.name != name) {
            let d = p.distance(o.pose.pos);
            if d < 2.0 * r - tolerance {
                out.push(format!("{d} from robot `{}`", o.name));
            }
        }
        out
    }
}

use declbot_core::engine::{robot_inputs, CompileError, CompiledProgram};
use declbot_core::rulelang::Severity;
use declbot_core::simcore::{compute_radar, memory_facts, sensor_fact, step_world, Status, World};

use super::protocol::{
    AreaView, ClientMessage, DiagnosticDoc, EditOp, ServerMessage, Stage, StatePayload,
};
use crate::json::record_to_json;
use crate::level::{AreaDoc, BeaconDoc, LevelDocument, RobotDoc, WallDoc};
use crate::runner::status_name;
use crate::scenarios::find_scenario;
use crate::trace::{RayLine, RobotLine};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    Paused,
    Auto { interval_ms: u64 },
}

/// One shared simulation, driven by client messages.
pub struct Session {
    level: LevelDocument,
    program_source: Option<String>,
    program: Option<CompiledProgram>,
    world: World,
    mode: RunMode,
    revision: u64,
}

/// Longest single `step` request.
pub const MAX_STEP_COUNT: u64 = 10_000;

impl Session {
    /// A paused session at step 0. A program that fails to compile is ignored.
    pub fn new(level: LevelDocument, program_source: Option<String>) -> Self {
        let program = program_source
            .as_deref()
            .and_then(|s| CompiledProgram::from_source(s).ok());
        Session {
            world: level.to_world(),
            level,
            program_source: program.as_ref().and(program_source),
            program,
            mode: RunMode::Paused,
            revision: 0,
        }
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn level(&self) -> &LevelDocument {
        &self.level
    }

    pub fn program_source(&self) -> Option<&str> {
        self.program_source.as_deref()
    }

    pub fn mode(&self) -> RunMode {
        self.mode
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn handle(&mut self, msg: ClientMessage) -> Vec<ServerMessage> {
        match msg {
            ClientMessage::LoadLevel { name, level } => self.load_level(name, level),
            ClientMessage::SetProgram { source } => self.set_program(source),
            ClientMessage::Step { count } => self.step(count),
            ClientMessage::Run { interval_ms } => self.run(interval_ms),
            ClientMessage::Pause {} => {
                self.mode = RunMode::Paused;
                self.revision += 1;
                vec![self.state()]
            }
            ClientMessage::Reset {} => {
                self.world = self.level.to_world();
                self.mode = RunMode::Paused;
                self.revision += 1;
                vec![self.state()]
            }
            ClientMessage::Edit { op } => self.edit(op),
            ClientMessage::Inspect { robot, predicate } => self.inspect(&robot, &predicate),
        }
    }

    /// One auto-run round, if auto-running.
    pub fn tick(&mut self) -> Vec<ServerMessage> {
        match self.mode {
            RunMode::Auto { .. } => self.round(),
            RunMode::Paused => Vec::new(),
        }
    }

    fn load_level(
        &mut self,
        name: Option<String>,
        level: Option<Box<LevelDocument>>,
    ) -> Vec<ServerMessage> {
        let (doc, program) = match (name, level) {
            (Some(name), None) => match find_scenario(&name) {
                Ok(b) => (b.level, Some(b.program_source).filter(|s| !s.is_empty())),
                Err(e) => return vec![ServerMessage::error(Stage::Validate, e.to_string())],
            },
            (None, Some(doc)) => {
                if let Err(e) = doc.validate() {
                    return vec![ServerMessage::error(Stage::Validate, e.to_string())];
                }
                (*doc, None)
            }
            _ => {
                return vec![ServerMessage::error(
                    Stage::Protocol,
                    "load_level needs exactly one of `name` and `level`",
                )]
            }
        };
        if let Some(source) = program {
            if let Ok(p) = CompiledProgram::from_source(&source) {
                self.program = Some(p);
                self.program_source = Some(source);
            }
        }
        self.world = doc.to_world();
        self.level = doc;
        self.mode = RunMode::Paused;
        self.revision += 1;
        vec![self.state()]
    }

    fn set_program(&mut self, source: String) -> Vec<ServerMessage> {
        match CompiledProgram::from_source(&source) {
            Ok(p) => {
                self.program = Some(p);
                self.program_source = Some(source);
                self.revision += 1;
                vec![ServerMessage::Diagnostics {
                    diagnostics: Vec::new(),
                }]
            }
            Err(CompileError::Syntax(e)) => vec![ServerMessage::Error {
                stage: Stage::Parse,
                message: match e.expected {
                    Some(exp) => format!("{} (expected {exp})", e.message),
                    None => e.message,
                },
                line: Some(e.line),
                column: Some(e.column),
            }],
            Err(CompileError::Invalid(diags)) => vec![ServerMessage::Diagnostics {
                diagnostics: diags
                    .into_iter()
                    .map(|d| DiagnosticDoc {
                        severity: match d.severity {
                            Severity::Error => "error",
                            Severity::Warning => "warning",
                        }
                        .into(),
                        message: d.message,
                        line: d.line,
                        column: d.column,
                    })
                    .collect(),
            }],
        }
    }

    fn check_runnable(&self) -> Option<ServerMessage> {
        if self.program.is_none() {
            return Some(ServerMessage::error(
                Stage::Validate,
                "no program is loaded",
            ));
        }
        if let Err(e) = self.world_status_ok() {
            return Some(ServerMessage::error(Stage::Runtime, e));
        }
        None
    }

    fn world_status_ok(&self) -> Result<(), String> {
        match self.world.status {
            Status::Running => Ok(()),
            Status::Won(step) => Err(format!(
                "the level was already won at step {step}; reset to run again"
            )),
            Status::StepLimitReached => {
                Err("the step limit has been reached; reset to run again".into())
            }
        }
    }

    fn step(&mut self, count: u64) -> Vec<ServerMessage> {
        if count > MAX_STEP_COUNT {
            return vec![ServerMessage::error(
                Stage::Protocol,
                format!("count must be at most {MAX_STEP_COUNT}"),
            )];
        }
        if let Some(e) = self.check_runnable() {
            return vec![e];
        }
        self.mode = RunMode::Paused;
        let mut out = Vec::new();
        for _ in 0..count {
            out.extend(self.round());
            if !self.world.status.is_running() {
                break;
            }
        }
        if out.is_empty() {
            out.push(self.state());
        }
        out
    }

    fn run(&mut self, interval_ms: u64) -> Vec<ServerMessage> {
        if let Some(e) = self.check_runnable() {
            return vec![e];
        }
        self.mode = RunMode::Auto {
            interval_ms: interval_ms.max(1),
        };
        self.round()
    }

    /// Advances one round; leaves auto mode when the run ends.
    fn round(&mut self) -> Vec<ServerMessage> {
        let Some(program) = &self.program else {
            self.mode = RunMode::Paused;
            return vec![ServerMessage::error(
                Stage::Validate,
                "no program is loaded",
            )];
        };
        match step_world(&self.world, program) {
            Ok((next, _)) => {
                self.world = next;
                self.revision += 1;
                match self.world.status {
                    Status::Running => vec![self.state()],
                    Status::Won(step) => {
                        self.mode = RunMode::Paused;
                        vec![self.state(), ServerMessage::Win { step }]
                    }
                    Status::StepLimitReached => {
                        self.mode = RunMode::Paused;
                        vec![self.state()]
                    }
                }
            }
            Err(e) => {
                self.mode = RunMode::Paused;
                vec![ServerMessage::error(Stage::Runtime, e.to_string())]
            }
        }
    }

    fn edit(&mut self, op: EditOp) -> Vec<ServerMessage> {
        self.mode = RunMode::Paused;
        match self.apply_edit(&op) {
            Ok(()) => {
                self.revision += 1;
                vec![self.state()]
            }
            Err(message) => vec![ServerMessage::error(Stage::Validate, message)],
        }
    }

    /// Applies `op` to the document, rebuilds the world from it, and carries
    /// over the live state of everything the edit did not touch.
    fn apply_edit(&mut self, op: &EditOp) -> Result<(), String> {
        let mut doc = self.level.clone();
        edit_document(&mut doc, op)?;
        doc.validate().map_err(|e| e.to_string())?;

        let mut world = doc.to_world();
        for robot in &mut world.robots {
            if let Some(old) = self.world.robot(&robot.name) {
                match op {
                    EditOp::MoveRobot { name, heading, .. } if *name == robot.name => {
                        if heading.is_none() {
                            robot.pose.heading = old.pose.heading;
                        }
                    }
                    _ => robot.pose = old.pose,
                }
                robot.memory = old.memory.clone();
                robot.last_desire = old.last_desire;
                robot.last_error = old.last_error.clone();
                robot.last_warning = old.last_warning.clone();
            }
        }
        for area in &mut world.areas {
            if let Some(old) = self.world.areas.iter().find(|a| a.id == area.id) {
                area.state = old.state;
                area.target = old.target;
                area.detected = old.detected;
            }
        }
        world.step = self.world.step;
        world.status = self.world.status;
        world.validate().map_err(|problems| problems.join("; "))?;
        self.level = doc;
        self.world = world;
        Ok(())
    }

    fn inspect(&self, robot: &str, predicate: &str) -> Vec<ServerMessage> {
        let Some(program) = &self.program else {
            return vec![ServerMessage::error(
                Stage::Validate,
                "no program is loaded",
            )];
        };
        let Some(state) = self.world.robot(robot) else {
            return vec![ServerMessage::error(
                Stage::Protocol,
                format!("no robot named `{robot}`"),
            )];
        };
        let radar = compute_radar(&self.world, state);
        let inputs = robot_inputs(
            &sensor_fact(robot, &radar),
            &memory_facts(&self.world, robot),
        );
        match program.evaluate(&inputs) {
            Ok(facts) => vec![ServerMessage::InspectResult {
                robot: robot.into(),
                predicate: predicate.into(),
                rows: facts.rows(predicate).map(record_to_json).collect(),
            }],
            Err(e) => vec![ServerMessage::Error {
                stage: Stage::Runtime,
                message: format!("in `{}`: {}", e.predicate, e.message),
                line: Some(e.span.line),
                column: Some(e.span.column),
            }],
        }
    }

    pub fn state(&self) -> ServerMessage {
        ServerMessage::State(Box::new(self.snapshot()))
    }

    pub fn snapshot(&self) -> StatePayload {
        let w = &self.world;
        let mut areas: Vec<AreaView> = w
            .areas
            .iter()
            .map(|a| AreaView {
                id: a.id.clone(),
                x: a.center.x,
                y: a.center.y,
                radius: a.radius,
                trigger_beacon: a.trigger_beacon.clone(),
                mode: a.mode.as_str().into(),
                state: a.state.as_str().into(),
                color: a.color.clone(),
            })
            .collect();
        areas.sort_by(|a, b| a.id.cmp(&b.id));
        StatePayload {
            revision: self.revision,
            level: self.level.name.clone(),
            step: w.step,
            max_steps: w.max_steps,
            status: status_name(w.status).into(),
            win: matches!(w.status, Status::Won(_)),
            mode: match self.mode {
                RunMode::Paused => "paused",
                RunMode::Auto { .. } => "auto",
            }
            .into(),
            bounds: self.level.bounds,
            robot_radius: w.physics.robot_radius,
            beacon_radius: w.sensor.beacon_radius,
            robots: w.robots.iter().map(RobotLine::from).collect(),
            areas,
            walls: self.level.walls.clone(),
            beacons: self.level.beacons.clone(),
            win_zones: self.level.win.clone(),
            radar: w
                .robots
                .iter()
                .map(|r| {
                    let rays = compute_radar(w, r).iter().map(RayLine::from).collect();
                    (r.name.clone(), rays)
                })
                .collect(),
        }
    }
}

fn edit_document(doc: &mut LevelDocument, op: &EditOp) -> Result<(), String> {
    match op {
        EditOp::AddWall { x1, y1, x2, y2 } => doc.walls.push(WallDoc {
            x1: *x1,
            y1: *y1,
            x2: *x2,
            y2: *y2,
        }),
        EditOp::RemoveWall { index } => {
            check_index(*index, doc.walls.len())?;
            doc.walls.remove(*index);
        }
        EditOp::MoveWall {
            index,
            x1,
            y1,
            x2,
            y2,
        } => {
            check_index(*index, doc.walls.len())?;
            doc.walls[*index] = WallDoc {
                x1: *x1,
                y1: *y1,
                x2: *x2,
                y2: *y2,
            };
        }
        EditOp::AddBeacon { label, x, y } => doc.beacons.push(BeaconDoc {
            label: label.clone(),
            x: *x,
            y: *y,
        }),
        EditOp::RemoveBeacon { label } => {
            let i = find(&doc.beacons, |b| b.label == *label, "beacon", label)?;
            doc.beacons.remove(i);
        }
        EditOp::MoveBeacon { label, x, y } => {
            let i = find(&doc.beacons, |b| b.label == *label, "beacon", label)?;
            doc.beacons[i].x = *x;
            doc.beacons[i].y = *y;
        }
        EditOp::AddArea { area } => doc.areas.push(area.clone()),
        EditOp::RemoveArea { id } => {
            let i = find(&doc.areas, |a: &AreaDoc| a.id == *id, "area", id)?;
            doc.areas.remove(i);
        }
        EditOp::MoveArea { id, x, y, radius } => {
            let i = find(&doc.areas, |a: &AreaDoc| a.id == *id, "area", id)?;
            doc.areas[i].x = *x;
            doc.areas[i].y = *y;
            if let Some(r) = radius {
                doc.areas[i].radius = *r;
            }
        }
        EditOp::AddRobot {
            name,
            x,
            y,
            heading,
        } => doc.robots.push(RobotDoc {
            name: name.clone(),
            x: *x,
            y: *y,
            heading: *heading,
        }),
        EditOp::RemoveRobot { name } => {
            let i = find(&doc.robots, |r: &RobotDoc| r.name == *name, "robot", name)?;
            doc.robots.remove(i);
            for c in &mut doc.win {
                if let crate::level::WinRobotsDoc::Named(names) = &mut c.robots {
                    names.retain(|n| n != name);
                }
            }
            doc.win.retain(
                |c| !matches!(&c.robots, crate::level::WinRobotsDoc::Named(n) if n.is_empty()),
            );
        }
        EditOp::MoveRobot {
            name,
            x,
            y,
            heading,
        } => {
            let i = find(&doc.robots, |r: &RobotDoc| r.name == *name, "robot", name)?;
            doc.robots[i].x = *x;
            doc.robots[i].y = *y;
            if let Some(h) = heading {
                doc.robots[i].heading = *h;
            }
        }
        EditOp::SetWin { win } => doc.win = win.clone(),
    }
    Ok(())
}

fn check_index(index: usize, len: usize) -> Result<(), String> {
    if index < len {
        Ok(())
    } else {
        Err(format!("no wall with index {index} (the level has {len})"))
    }
}

fn find<T>(items: &[T], pred: impl Fn(&T) -> bool, kind: &str, key: &str) -> Result<usize, String> {
    items
        .iter()
        .position(pred)
        .ok_or_else(|| format!("no {kind} named `{key}`"))
}

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use super::areas::{check_win, update_areas};
use super::motion::{integrate_motion, resolve_collision};
use super::radar::{compute_radar, RadarRay};
use super::world::{AreaState, Status, World};
use crate::engine::{
    run_robot_step, CompiledProgram, Decision, Desire, Fact, MEMORY_PREDICATE, SENSOR_PREDICATE,
};
use crate::value::{Record, Value};

#[derive(Debug, Clone, PartialEq)]
pub struct RobotTrace {
    pub name: String,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub desire: Desire,
    pub memory: Value,
    pub error: Option<String>,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AreaTrace {
    pub id: String,
    pub state: AreaState,
}

/// Everything observable about one round, in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub step: u64,
    pub robots: Vec<RobotTrace>,
    pub areas: Vec<AreaTrace>,
    pub win: bool,
    /// This round's radar per robot, by name.
    pub radar: BTreeMap<String, Vec<RadarRay>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NotRunning(pub Status);

impl core::fmt::Display for NotRunning {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self.0 {
            Status::Won(step) => write!(f, "the level was already won at step {step}"),
            _ => f.write_str("the step limit has been reached"),
        }
    }
}

pub fn sensor_fact(robot_name: &str, radar: &[RadarRay]) -> Fact {
    let mut sensor = Record::new();
    sensor.insert(
        "radar".into(),
        Value::list(radar.iter().map(RadarRay::to_value)),
    );
    let mut row = Record::new();
    row.insert("robot_name".into(), Value::str(robot_name));
    row.insert("sensor".into(), Value::from(sensor));
    Fact::new(SENSOR_PREDICATE, row)
}

/// The Memory rows `reader` may see, one per permitted robot.
pub fn memory_facts(world: &World, reader: &str) -> Vec<Fact> {
    world
        .robots
        .iter()
        .filter(|r| world.memory_access.can_read(reader, &r.name))
        .map(|r| {
            let mut row = Record::new();
            row.insert("robot_name".into(), Value::str(&r.name));
            row.insert("memory".into(), r.memory.clone());
            Fact::new(MEMORY_PREDICATE, row)
        })
        .collect()
}

/// Runs one synchronous round.
pub fn step_world(
    world: &World,
    program: &CompiledProgram,
) -> Result<(World, TraceRecord), NotRunning> {
    let order: Vec<usize> = (0..world.robots.len()).collect();
    step_world_ordered(world, program, &order)
}

/// [`step_world`] with the robots' decisions computed in `decision_order`
/// (a permutation of robot indices). The outcome does not depend on it.
pub fn step_world_ordered(
    world: &World,
    program: &CompiledProgram,
    decision_order: &[usize],
) -> Result<(World, TraceRecord), NotRunning> {
    if !world.status.is_running() {
        return Err(NotRunning(world.status));
    }
    let snapshot = world;
    let radars: Vec<Vec<RadarRay>> = snapshot
        .robots
        .iter()
        .map(|r| compute_radar(snapshot, r))
        .collect();

    let mut decisions: Vec<Option<Decision>> = alloc::vec![None; snapshot.robots.len()];
    for &i in decision_order {
        let robot = &snapshot.robots[i];
        let sensor = sensor_fact(&robot.name, &radars[i]);
        let memory = memory_facts(snapshot, &robot.name);
        decisions[i] = Some(run_robot_step(program, &robot.name, &sensor, &memory));
    }
    let decisions: Vec<Decision> = decisions
        .into_iter()
        .map(|d| d.expect("decision order must cover every robot"))
        .collect();

    let mut next = snapshot.clone();
    for (robot, d) in next.robots.iter_mut().zip(&decisions) {
        robot.memory = d.memory.clone();
        robot.last_desire = d.desire;
        robot.last_error = d.error.clone();
        robot.last_warning = d.warning.clone();
    }
    for (i, d) in decisions.iter().enumerate() {
        let old = next.robots[i].pose;
        let tentative = integrate_motion(old, d.desire, &next.physics);
        let name = next.robots[i].name.clone();
        next.robots[i].pose = resolve_collision(&next, old, tentative, &name);
    }

    let radar: BTreeMap<String, Vec<RadarRay>> = snapshot
        .robots
        .iter()
        .map(|r| r.name.clone())
        .zip(radars)
        .collect();
    next.areas = update_areas(&next, &radar);

    next.step += 1;
    let win = check_win(&next);
    if win {
        next.status = Status::Won(next.step);
    } else if next.step >= next.max_steps {
        next.status = Status::StepLimitReached;
    }
    let trace = trace_record(&next, win, radar);
    Ok((next, trace))
}

fn trace_record(world: &World, win: bool, radar: BTreeMap<String, Vec<RadarRay>>) -> TraceRecord {
    let mut areas: Vec<AreaTrace> = world
        .areas
        .iter()
        .map(|a| AreaTrace {
            id: a.id.clone(),
            state: a.state,
        })
        .collect();
    areas.sort_by(|a, b| a.id.cmp(&b.id));
    TraceRecord {
        step: world.step,
        robots: world
            .robots
            .iter()
            .map(|r| RobotTrace {
                name: r.name.clone(),
                x: r.pose.pos.x,
                y: r.pose.pos.y,
                heading: r.pose.heading,
                desire: r.last_desire,
                memory: r.memory.clone(),
                error: r.last_error.clone(),
                warning: r.last_warning.clone(),
            })
            .collect(),
        areas,
        win,
        radar,
    }
}

/// Clearance violations beyond the 1e-6 tolerance, one message each.
pub fn penetration_violations(world: &World) -> Vec<String> {
    const TOLERANCE: f64 = 1e-6;
    let mut out = Vec::new();
    for r in &world.robots {
        for p in world.clearance_problems(r.pose.pos, &r.name, TOLERANCE) {
            out.push(alloc::format!("robot `{}` is {p}", r.name));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rulelang::listings::LISTING_1;
    use crate::simcore::world::{MemoryAccess, RobotState};
    use alloc::vec;

    fn open_field() -> World {
        let mut w = World::new(100.0, 100.0);
        w.robots.push(RobotState::new("r1", 50.0, 50.0, 0.0));
        w
    }

    #[test]
    fn listing_one_first_step() {
        let p = CompiledProgram::from_source(LISTING_1).unwrap();
        let (w, t) = step_world(&open_field(), &p).unwrap();
        assert_eq!(t.step, 1);
        let r = &t.robots[0];
        assert!((r.desire.left_engine - 0.6).abs() < 1e-12);
        assert!((r.desire.right_engine - 0.5).abs() < 1e-12);
        assert_eq!(r.memory, Value::str("I am a robot"));
        assert_eq!(w.robots[0].memory, Value::str("I am a robot"));
        assert!(
            w.robots[0].pose.heading < 0.0,
            "left engine faster turns right"
        );
    }

    #[test]
    fn memories_swap_through_the_snapshot() {
        let src = r#"
            Robot(robot_name:, desire: {left_engine: 0, right_engine: 0}, memory: m) :-
              Sensor(robot_name:), Memory(robot_name: other, memory: m), other != robot_name;
        "#;
        let p = CompiledProgram::from_source(src).unwrap();
        let mut w = World::new(10.0, 10.0);
        w.memory_access = MemoryAccess::All;
        w.robots.push(RobotState::new("a", 2.0, 2.0, 0.0));
        w.robots.push(RobotState::new("b", 8.0, 8.0, 0.0));
        w.robots[0].memory = Value::str("from a");
        w.robots[1].memory = Value::str("from b");
        let (w, _) = step_world(&w, &p).unwrap();
        assert_eq!(w.robots[0].memory, Value::str("from b"));
        assert_eq!(w.robots[1].memory, Value::str("from a"));
    }

    #[test]
    fn decision_order_does_not_matter() {
        let p = CompiledProgram::from_source(LISTING_1).unwrap();
        let mut w = World::new(10.0, 10.0);
        for (i, name) in ["a", "b", "c"].iter().enumerate() {
            w.robots.push(RobotState::new(
                *name,
                2.0 + 2.0 * i as f64,
                5.0,
                0.5 * i as f64,
            ));
        }
        let (mut w1, mut w2) = (w.clone(), w);
        for _ in 0..50 {
            let (n1, t1) = step_world_ordered(&w1, &p, &[0, 1, 2]).unwrap();
            let (n2, t2) = step_world_ordered(&w2, &p, &[2, 0, 1]).unwrap();
            assert_eq!(t1, t2);
            (w1, w2) = (n1, n2);
        }
    }

    #[test]
    fn step_limit_and_finished_worlds() {
        let p = CompiledProgram::from_source(LISTING_1).unwrap();
        let mut w = open_field();
        w.max_steps = 2;
        let (w, _) = step_world(&w, &p).unwrap();
        assert_eq!(w.status, Status::Running);
        let (w, _) = step_world(&w, &p).unwrap();
        assert_eq!(w.status, Status::StepLimitReached);
        assert!(step_world(&w, &p).is_err());
    }

    #[test]
    fn errors_idle_the_robot_and_are_traced() {
        let p = CompiledProgram::from_source(r#"Robot(robot_name: "nobody", desire: 1);"#).unwrap();
        let (w, t) = step_world(&open_field(), &p).unwrap();
        assert!(t.robots[0].error.is_some());
        assert_eq!(t.robots[0].desire, Desire::ZERO);
        assert_eq!(w.robots[0].pose.pos, open_field().robots[0].pose.pos);
        assert_eq!(vec![t.robots[0].memory.clone()], vec![Value::Null]);
    }
}

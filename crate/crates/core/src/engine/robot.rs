use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::eval::{CompiledProgram, Fact, FactSet};
use crate::value::{Record, Value};

/// Engine commands for one round.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Desire {
    pub left_engine: f64,
    pub right_engine: f64,
}

impl Desire {
    pub const ZERO: Desire = Desire {
        left_engine: 0.0,
        right_engine: 0.0,
    };

    pub fn to_value(self) -> Value {
        let mut r = Record::new();
        r.insert("left_engine".into(), Value::Number(self.left_engine));
        r.insert("right_engine".into(), Value::Number(self.right_engine));
        Value::from(r)
    }
}

/// What a robot decided this round. With `error` set the desire is zero and
/// `memory` is the robot's previous memory.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub desire: Desire,
    pub memory: Value,
    pub error: Option<String>,
    pub warning: Option<String>,
}

impl Decision {
    fn failed(memory: Value, error: String) -> Self {
        Decision {
            desire: Desire::ZERO,
            memory,
            error: Some(error),
            warning: None,
        }
    }
}

pub const ROBOT_PREDICATE: &str = "Robot";
pub const SENSOR_PREDICATE: &str = "Sensor";
pub const MEMORY_PREDICATE: &str = "Memory";

/// The memory this robot held before the round, taken from its own Memory row.
fn own_memory(robot_name: &str, memory_rows: &[Fact]) -> Value {
    memory_rows
        .iter()
        .find(|f| f.row.get("robot_name").and_then(Value::as_str) == Some(robot_name))
        .and_then(|f| f.row.get("memory").cloned())
        .unwrap_or_default()
}

/// Builds the input facts for one robot's evaluation.
pub fn robot_inputs(sensor_row: &Fact, memory_rows: &[Fact]) -> FactSet {
    core::iter::once(sensor_row.clone())
        .chain(memory_rows.iter().cloned())
        .collect()
}

/// Runs the program for one robot and extracts its decision.
pub fn run_robot_step(
    program: &CompiledProgram,
    robot_name: &str,
    sensor_row: &Fact,
    memory_rows: &[Fact],
) -> Decision {
    let previous = own_memory(robot_name, memory_rows);
    let facts = match program.evaluate(&robot_inputs(sensor_row, memory_rows)) {
        Ok(f) => f,
        Err(e) => return Decision::failed(previous, e.to_string()),
    };
    decision_from_facts(&facts, robot_name, previous)
}

/// Picks this robot's `Robot` row out of an evaluation result.
pub fn decision_from_facts(facts: &FactSet, robot_name: &str, previous: Value) -> Decision {
    let rows: Vec<&Record> = facts
        .rows(ROBOT_PREDICATE)
        .filter(|r| r.get("robot_name").and_then(Value::as_str) == Some(robot_name))
        .collect();
    let row = match rows.as_slice() {
        [row] => *row,
        [] => return Decision::failed(previous, format!("no Robot row for robot `{robot_name}`")),
        many => {
            return Decision::failed(
                previous,
                format!(
                    "ambiguous decision: {} Robot rows for robot `{robot_name}`",
                    many.len()
                ),
            )
        }
    };
    let desire = match row.get("desire") {
        Some(Value::Record(d)) => d,
        Some(other) => {
            return Decision::failed(
                previous,
                format!(
                    "desire must be a record, got {} `{other}`",
                    other.type_name()
                ),
            )
        }
        None => return Decision::failed(previous, "Robot row has no desire".into()),
    };
    let mut warnings = Vec::new();
    let mut engine = |name: &str| match desire.get(name).and_then(Value::as_number) {
        Some(x) if x.is_finite() => x,
        _ => {
            warnings.push(format!("{name} missing or not a number; using 0"));
            0.0
        }
    };
    let desire = Desire {
        left_engine: engine("left_engine"),
        right_engine: engine("right_engine"),
    };
    Decision {
        desire,
        memory: row.get("memory").cloned().unwrap_or(previous),
        error: None,
        warning: (!warnings.is_empty()).then(|| warnings.join("; ")),
    }
}

//! Bottom-up evaluation of validated programs, one stratum at a time.

pub mod aggregate;
pub mod builtins;
mod eval;
mod robot;

pub use aggregate::{aggregate, aggregate_groups, AggItem, AggregateError, Aggregation};
pub use builtins::{call_builtin, normalize_angle, BuiltinError, BUILTINS};
pub use eval::{evaluate, CompileError, CompiledProgram, EvalError, Fact, FactSet, Row};
pub use robot::{
    decision_from_facts, robot_inputs, run_robot_step, Decision, Desire, MEMORY_PREDICATE,
    ROBOT_PREDICATE, SENSOR_PREDICATE,
};

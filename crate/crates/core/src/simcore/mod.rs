//! The simulated world and its synchronous round loop.
//!
//! A round snapshots the world, computes every radar and every decision
//! against that snapshot, then commits memories, moves robots in name order,
//! updates areas and checks the win conditions.

mod areas;
mod motion;
mod radar;
mod step;
mod world;

pub use areas::{check_win, detected, update_areas};
pub use motion::{integrate_motion, is_free, resolve_collision, COLLISION_ITERATIONS};
pub use radar::{cast_ray, compute_radar, ray_angle, Hit, ObjectKind, RadarRay};
pub use step::{
    memory_facts, penetration_violations, sensor_fact, step_world, step_world_ordered, AreaTrace,
    NotRunning, RobotTrace, TraceRecord,
};
pub use world::{
    Area, AreaMode, AreaState, Beacon, MemoryAccess, PhysicsConfig, Pose, RobotState, SensorConfig,
    Status, WinCondition, WinRobots, World, DEFAULT_MAX_STEPS,
};

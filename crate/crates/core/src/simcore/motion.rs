use super::world::{PhysicsConfig, Pose, World};
use crate::engine::{normalize_angle, Desire};
use crate::geometry::{point_segment_distance, Vec2};

/// Binary-search steps used to shorten a blocked move.
pub const COLLISION_ITERATIONS: u32 = 8;

fn engine(x: f64, limit: f64) -> f64 {
    if x.is_finite() {
        x.clamp(-limit, limit)
    } else {
        0.0
    }
}

/// Differential-drive update over one tick, ignoring obstacles.
pub fn integrate_motion(pose: Pose, desire: Desire, physics: &PhysicsConfig) -> Pose {
    let l = engine(desire.left_engine, physics.engine_limit);
    let r = engine(desire.right_engine, physics.engine_limit);
    let (sl, sr) = (physics.v_max * l, physics.v_max * r);
    let v = (sl + sr) / 2.0;
    let omega = (sr - sl) / physics.axle_width;
    let mid = pose.heading + omega * physics.dt / 2.0;
    Pose {
        pos: Vec2::new(
            pose.pos.x + v * physics.dt * libm::cos(mid),
            pose.pos.y + v * physics.dt * libm::sin(mid),
        ),
        heading: normalize_angle(pose.heading + omega * physics.dt),
    }
}

/// Whether robot `name`'s disc at `p` touches nothing solid.
pub fn is_free(world: &World, p: Vec2, name: &str) -> bool {
    let r = world.physics.robot_radius;
    if p.x < r || p.y < r || p.x > world.width - r || p.y > world.height - r {
        return false;
    }
    world
        .walls
        .iter()
        .all(|w| point_segment_distance(p, *w) >= r)
        && world
            .areas
            .iter()
            .filter(|a| a.is_restricted())
            .all(|a| p.distance(a.center) >= a.radius + r)
        && world
            .robots
            .iter()
            .filter(|o| o.name != name)
            .all(|o| p.distance(o.pose.pos) >= 2.0 * r)
}

/// Applies the rotation of `tentative` and as much of its translation as
/// stays free, against the robots' positions in `world`.
pub fn resolve_collision(world: &World, old: Pose, tentative: Pose, name: &str) -> Pose {
    let delta = tentative.pos - old.pos;
    let at = |t: f64| old.pos + delta * t;
    let pos = if is_free(world, tentative.pos, name) {
        tentative.pos
    } else {
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..COLLISION_ITERATIONS {
            let mid = (lo + hi) / 2.0;
            if is_free(world, at(mid), name) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if lo == 0.0 {
            old.pos
        } else {
            at(lo)
        }
    };
    Pose {
        pos,
        heading: tentative.heading,
    }
}

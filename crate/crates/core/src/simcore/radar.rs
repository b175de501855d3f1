use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::world::{RobotState, World};
use crate::geometry::{ray_circle, ray_segment, Vec2};
use crate::value::{Record, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ObjectKind {
    Beacon,
    Wall,
    Robot,
    None,
}

impl ObjectKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ObjectKind::Beacon => "beacon",
            ObjectKind::Wall => "wall",
            ObjectKind::Robot => "robot",
            ObjectKind::None => "none",
        }
    }
}

/// What one ray reports. `angle` is relative to the robot's heading.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarRay {
    pub angle: f64,
    pub distance: f64,
    pub object: ObjectKind,
    pub label: String,
}

impl RadarRay {
    pub fn to_value(&self) -> Value {
        let mut r = Record::new();
        r.insert("angle".into(), Value::Number(self.angle));
        r.insert("distance".into(), Value::Number(self.distance));
        r.insert("object".into(), Value::str(self.object.as_str()));
        r.insert("label".into(), Value::str(&self.label));
        Value::from(r)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hit {
    pub object: ObjectKind,
    pub distance: f64,
    pub label: String,
    pub point: Vec2,
}

/// Relative angle of ray `k` of `n`: a fan symmetric about the heading.
///
/// Computed as `pi * (2k + 1 - n) / n`, equal to `-pi + (k + 1/2) * 2pi / n`,
/// so mirrored rays are exact negations of each other.
pub fn ray_angle(k: usize, n: usize) -> f64 {
    PI * (2 * k as i64 + 1 - n as i64) as f64 / n as f64
}

/// Nearest object along a ray. Hits at or beyond `range` are not reported.
pub fn cast_ray(
    world: &World,
    origin: Vec2,
    angle: f64,
    range: f64,
    ignore_robot: Option<&str>,
) -> Hit {
    let dir = Vec2::from_angle(angle);
    let mut hits: Vec<(Option<f64>, ObjectKind, &str)> = Vec::new();
    for w in &world.walls {
        hits.push((ray_segment(origin, dir, *w), ObjectKind::Wall, ""));
    }
    for e in world.bounds_edges() {
        hits.push((ray_segment(origin, dir, e), ObjectKind::Wall, ""));
    }
    for a in world.areas.iter().filter(|a| a.is_restricted()) {
        hits.push((
            ray_circle(origin, dir, a.center, a.radius),
            ObjectKind::Wall,
            &a.id,
        ));
    }
    let br = world.sensor.beacon_radius;
    for b in &world.beacons {
        hits.push((
            ray_circle(origin, dir, b.pos, br),
            ObjectKind::Beacon,
            &b.label,
        ));
    }
    let rr = world.physics.robot_radius;
    for r in world
        .robots
        .iter()
        .filter(|r| Some(r.name.as_str()) != ignore_robot)
    {
        hits.push((
            ray_circle(origin, dir, r.pose.pos, rr),
            ObjectKind::Robot,
            &r.name,
        ));
    }
    // Strictly nearest wins; on exact ties the earlier class in the list above.
    let mut best: Option<(f64, ObjectKind, &str)> = None;
    for (t, kind, label) in hits {
        if let Some(t) = t {
            if t < range && best.is_none_or(|(b, _, _)| t < b) {
                best = Some((t, kind, label));
            }
        }
    }
    match best {
        Some((t, object, label)) => Hit {
            object,
            distance: t,
            label: label.into(),
            point: origin + dir * t,
        },
        None => Hit {
            object: ObjectKind::None,
            distance: range,
            label: String::new(),
            point: origin + dir * range,
        },
    }
}

/// The robot's full radar sweep against `world` as it stands.
pub fn compute_radar(world: &World, robot: &RobotState) -> Vec<RadarRay> {
    let n = world.sensor.ray_count;
    (0..n)
        .map(|k| {
            let rel = ray_angle(k, n);
            let hit = cast_ray(
                world,
                robot.pose.pos,
                robot.pose.heading + rel,
                world.sensor.range,
                Some(&robot.name),
            );
            RadarRay {
                angle: rel,
                distance: hit.distance,
                object: hit.object,
                label: hit.label,
            }
        })
        .collect()
}

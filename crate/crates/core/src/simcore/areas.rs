use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use super::radar::{ObjectKind, RadarRay};
use super::world::{Area, AreaMode, AreaState, WinRobots, World};

/// Whether any robot's radar sees `beacon` this round.
pub fn detected(radars: &BTreeMap<String, Vec<RadarRay>>, beacon: &str) -> bool {
    radars
        .values()
        .flatten()
        .any(|r| r.object == ObjectKind::Beacon && r.label == beacon)
}

/// Next state of every area given this round's radars.
///
/// An area never closes on a robot: while some robot's disc overlaps it, a
/// pending close waits and the area stays accessible.
pub fn update_areas(world: &World, radars: &BTreeMap<String, Vec<RadarRay>>) -> Vec<Area> {
    let r = world.physics.robot_radius;
    world
        .areas
        .iter()
        .map(|a| {
            let seen = detected(radars, &a.trigger_beacon);
            let target = match a.mode {
                AreaMode::WhileDetected if seen => AreaState::Accessible,
                AreaMode::WhileDetected => AreaState::Restricted,
                AreaMode::LatchToggle if seen && !a.detected => a.target.flipped(),
                AreaMode::LatchToggle => a.target,
            };
            let occupied = || {
                world
                    .robots
                    .iter()
                    .any(|rb| rb.pose.pos.distance(a.center) < a.radius + r)
            };
            let state = if target == AreaState::Restricted
                && a.state == AreaState::Accessible
                && occupied()
            {
                AreaState::Accessible
            } else {
                target
            };
            Area {
                state,
                target,
                detected: seen,
                ..a.clone()
            }
        })
        .collect()
}

/// True when every win condition holds this round. A level without win
/// conditions is never won.
pub fn check_win(world: &World) -> bool {
    !world.win_conditions.is_empty()
        && world.win_conditions.iter().all(|c| {
            let inside = |name: &str| {
                world
                    .robot(name)
                    .is_some_and(|rb| rb.pose.pos.distance(c.center) < c.radius)
            };
            match &c.robots {
                WinRobots::All => world.robots.iter().all(|rb| inside(&rb.name)),
                WinRobots::Named(names) => names.iter().all(|n| inside(n)),
            }
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec2;
    use crate::simcore::world::{Beacon, RobotState, WinCondition};
    use alloc::vec;

    fn ray(object: ObjectKind, label: &str) -> RadarRay {
        RadarRay {
            angle: 0.0,
            distance: 1.0,
            object,
            label: label.into(),
        }
    }

    fn world(mode: AreaMode) -> World {
        let mut w = World::new(20.0, 20.0);
        w.beacons.push(Beacon {
            label: "Fire Station".into(),
            pos: Vec2::new(1.0, 1.0),
        });
        w.areas.push(Area::new(
            "H",
            Vec2::new(10.0, 10.0),
            1.0,
            "Fire Station",
            mode,
            AreaState::Restricted,
        ));
        w.robots.push(RobotState::new("r1", 3.0, 3.0, 0.0));
        w
    }

    fn radars(seen: bool) -> BTreeMap<String, Vec<RadarRay>> {
        let r = if seen {
            ray(ObjectKind::Beacon, "Fire Station")
        } else {
            ray(ObjectKind::Wall, "Fire Station")
        };
        BTreeMap::from([(String::from("r1"), vec![r])])
    }

    #[test]
    fn while_detected_follows_detection() {
        let mut w = world(AreaMode::WhileDetected);
        w.areas = update_areas(&w, &radars(true));
        assert_eq!(w.areas[0].state, AreaState::Accessible);
        w.areas = update_areas(&w, &radars(false));
        assert_eq!(w.areas[0].state, AreaState::Restricted);
    }

    #[test]
    fn latch_toggles_on_rising_edge() {
        let mut w = world(AreaMode::LatchToggle);
        let mut states = vec![];
        for round in 1..=6 {
            w.areas = update_areas(&w, &radars(round == 3 || round == 4));
            states.push(w.areas[0].state);
        }
        use AreaState::*;
        assert_eq!(
            states,
            [Restricted, Restricted, Accessible, Accessible, Accessible, Accessible]
        );
    }

    #[test]
    fn closing_waits_for_occupants() {
        let mut w = world(AreaMode::WhileDetected);
        w.areas = update_areas(&w, &radars(true));
        w.robots[0].pose.pos = Vec2::new(10.5, 10.0);
        w.areas = update_areas(&w, &radars(false));
        assert_eq!(w.areas[0].state, AreaState::Accessible);
        assert_eq!(w.areas[0].target, AreaState::Restricted);
        w.robots[0].pose.pos = Vec2::new(12.0, 10.0);
        w.areas = update_areas(&w, &radars(false));
        assert_eq!(w.areas[0].state, AreaState::Restricted);
    }

    #[test]
    fn win_conditions() {
        let mut w = World::new(20.0, 20.0);
        w.robots.push(RobotState::new("a", 5.0, 5.0, 0.0));
        w.robots.push(RobotState::new("b", 5.5, 5.0, 0.0));
        assert!(!check_win(&w));
        w.win_conditions.push(WinCondition {
            center: Vec2::new(5.0, 5.0),
            radius: 1.0,
            robots: WinRobots::Named(vec!["a".into(), "b".into()]),
        });
        assert!(check_win(&w));
        w.robots[1].pose.pos = Vec2::new(7.0, 5.0);
        assert!(!check_win(&w));
        w.win_conditions[0].robots = WinRobots::Named(vec!["a".into()]);
        assert!(check_win(&w));
        w.robots.pop();
        w.win_conditions[0].robots = WinRobots::All;
        assert!(check_win(&w));
        w.robots[0].pose.pos = Vec2::new(6.0, 5.0);
        assert!(!check_win(&w), "center on the boundary is not inside");
    }
}

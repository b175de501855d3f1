use declbot_core::engine::CompiledProgram;
use declbot_core::engine::Desire;
use declbot_core::geometry::{point_segment_distance, Segment, Vec2};
use declbot_core::rulelang::listings::LISTING_1;
use declbot_core::simcore::{
    cast_ray, compute_radar, integrate_motion, penetration_violations, step_world, Area, AreaMode,
    AreaState, Beacon, ObjectKind, PhysicsConfig, Pose, RobotState, World,
};
use proptest::prelude::*;

fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b - a).cross(c - a)
}

/// Proper or touching intersection of two closed segments.
fn segments_meet(p: Segment, q: Segment) -> bool {
    let d1 = orient(q.a, q.b, p.a);
    let d2 = orient(q.a, q.b, p.b);
    let d3 = orient(p.a, p.b, q.a);
    let d4 = orient(p.a, p.b, q.b);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

fn coord(max: f64) -> impl Strategy<Value = f64> {
    (0.5..max - 0.5).prop_map(|x: f64| (x * 100.0).round() / 100.0)
}

fn point() -> impl Strategy<Value = Vec2> {
    (coord(20.0), coord(20.0)).prop_map(|(x, y)| Vec2::new(x, y))
}

/// A world with random walls, beacons, restricted areas and robots. Objects
/// may overlap each other; radar must cope regardless.
fn world() -> impl Strategy<Value = World> {
    (
        proptest::collection::vec((point(), point()), 0..6),
        proptest::collection::vec(point(), 0..4),
        proptest::collection::vec((point(), 0.3f64..1.5), 0..3),
        proptest::collection::vec((point(), -3.0f64..3.0), 1..4),
    )
        .prop_map(|(walls, beacons, areas, robots)| {
            let mut w = World::new(20.0, 20.0);
            w.walls = walls.into_iter().map(|(a, b)| Segment::new(a, b)).collect();
            w.beacons = beacons
                .into_iter()
                .enumerate()
                .map(|(i, pos)| Beacon {
                    label: format!("B{i}"),
                    pos,
                })
                .collect();
            w.areas = areas
                .into_iter()
                .enumerate()
                .map(|(i, (c, r))| {
                    Area::new(
                        format!("A{i}"),
                        c,
                        r,
                        "B0",
                        AreaMode::WhileDetected,
                        AreaState::Restricted,
                    )
                })
                .collect();
            w.robots = robots
                .into_iter()
                .enumerate()
                .map(|(i, (p, h))| RobotState::new(format!("r{i}"), p.x, p.y, h))
                .collect();
            w
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn radar_hits_are_sound(w in world(), angle in -4.0f64..4.0) {
        let me = &w.robots[0];
        let origin = me.pose.pos;
        let range = w.sensor.range;
        let hit = cast_ray(&w, origin, angle, range, Some(&me.name));
        let dir = Vec2::from_angle(angle);
        prop_assert!((hit.point.distance(origin + dir * hit.distance)) < 1e-9);
        prop_assert!(hit.distance >= 0.0 && hit.distance <= range);

        // The hit point lies on the reported object.
        let on = |d: f64| d.abs() < 1e-6;
        match hit.object {
            ObjectKind::None => {
                prop_assert_eq!(hit.distance, range);
                prop_assert!(hit.label.is_empty());
            }
            ObjectKind::Wall if hit.label.is_empty() => {
                let on_wall = w.walls.iter().chain(w.bounds_edges().iter())
                    .any(|s| on(point_segment_distance(hit.point, *s)));
                prop_assert!(on_wall);
            }
            ObjectKind::Wall => {
                let a = w.areas.iter().find(|a| a.id == hit.label).unwrap();
                prop_assert!(on(hit.point.distance(a.center) - a.radius));
            }
            ObjectKind::Beacon => {
                let b = w.beacons.iter().find(|b| b.label == hit.label).unwrap();
                prop_assert!(on(hit.point.distance(b.pos) - w.sensor.beacon_radius));
            }
            ObjectKind::Robot => {
                let r = w.robots.iter().find(|r| r.name == hit.label).unwrap();
                prop_assert!(on(hit.point.distance(r.pose.pos) - w.physics.robot_radius));
            }
        }

        // Nothing sensed lies strictly closer along the ray.
        let short = (hit.distance - 1e-6).max(0.0);
        let before = Segment::new(origin, origin + dir * short);
        for s in w.walls.iter().chain(w.bounds_edges().iter()) {
            prop_assert!(!segments_meet(before, *s), "wall {:?} before hit", s);
        }
        let mut discs: Vec<(Vec2, f64)> = w.beacons.iter().map(|b| (b.pos, w.sensor.beacon_radius)).collect();
        discs.extend(w.areas.iter().map(|a| (a.center, a.radius)));
        discs.extend(w.robots.iter().skip(1).map(|r| (r.pose.pos, w.physics.robot_radius)));
        for (c, r) in discs {
            if origin.distance(c) <= r {
                continue; // the ray starts inside; it never enters this disc
            }
            prop_assert!(point_segment_distance(c, before) >= r - 1e-9, "disc at {:?} before hit", c);
        }
    }
}

fn maze() -> impl Strategy<Value = World> {
    (
        proptest::collection::vec((point(), point()), 0..5),
        proptest::collection::vec((point(), -3.0f64..3.0), 1..5),
    )
        .prop_map(|(walls, robots)| {
            let mut w = World::new(20.0, 20.0);
            w.walls = walls.into_iter().map(|(a, b)| Segment::new(a, b)).collect();
            for (i, (p, h)) in robots.into_iter().enumerate() {
                let r = RobotState::new(format!("r{i}"), p.x, p.y, h);
                if w.clearance_problems(p, &r.name, 0.0).is_empty() {
                    w.robots.push(r);
                }
            }
            w
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn robots_never_penetrate_and_respect_speed(w in maze()) {
        let program = CompiledProgram::from_source(LISTING_1).unwrap();
        let mut w = w;
        let bound = w.physics.v_max * w.physics.dt + 1e-9;
        for _ in 0..150 {
            let before: Vec<Vec2> = w.robots.iter().map(|r| r.pose.pos).collect();
            let (next, _) = step_world(&w, &program).unwrap();
            let violations = penetration_violations(&next);
            prop_assert!(violations.is_empty(), "{violations:?}");
            for (r, p) in next.robots.iter().zip(before) {
                prop_assert!(r.pose.pos.distance(p) <= bound);
                prop_assert!(r.pose.heading > -std::f64::consts::PI && r.pose.heading <= std::f64::consts::PI);
            }
            w = next;
        }
    }
}

#[test]
fn facing_a_wall_front_rays_see_it() {
    let mut w = World::new(20.0, 20.0);
    w.walls
        .push(Segment::new(Vec2::new(12.0, 5.0), Vec2::new(12.0, 15.0)));
    w.robots.push(RobotState::new("r", 10.0, 10.0, 0.0));
    let radar = compute_radar(&w, &w.robots[0]);
    for ray in &radar {
        // Oracle: the wall is hit when the ray's x-run reaches 12 within range
        // and the crossing height stays on the wall.
        let a = ray.angle;
        let expect_wall = a.cos() > 0.0 && {
            let t = 2.0 / a.cos();
            t < 6.0 && (10.0 + t * a.sin() - 10.0).abs() <= 5.0
        };
        if expect_wall {
            assert_eq!(ray.object, ObjectKind::Wall, "angle {a}");
            assert!((ray.distance - 2.0 / a.cos()).abs() < 1e-9);
        } else {
            assert_eq!(ray.object, ObjectKind::None, "angle {a}");
        }
    }
    assert!(radar.iter().any(|r| r.object == ObjectKind::Wall));
}

#[test]
fn head_on_wall_stop_distance() {
    let program = CompiledProgram::from_source(
        r#"Robot(robot_name:, desire: {left_engine: 1, right_engine: 1}) :- Sensor(robot_name:);"#,
    )
    .unwrap();
    let mut w = World::new(20.0, 20.0);
    w.walls
        .push(Segment::new(Vec2::new(12.0, 0.0), Vec2::new(12.0, 20.0)));
    w.robots.push(RobotState::new("r", 10.0, 10.0, 0.0));
    for _ in 0..40 {
        w = step_world(&w, &program).unwrap().0;
    }
    let gap = 12.0 - w.robots[0].pose.pos.x;
    let step = w.physics.v_max * w.physics.dt;
    assert!(gap >= 0.25, "{gap}");
    assert!(gap <= 0.25 + step / 256.0 + 1e-9, "{gap}");
}

#[test]
fn motion_formulas() {
    let phys = PhysicsConfig::default();
    let d = |l, r| Desire {
        left_engine: l,
        right_engine: r,
    };
    let p = integrate_motion(Pose::new(0.0, 0.0, 0.0), d(0.5, 1.0), &phys);
    // v = 0.75, omega = 1, heading advances 0.1; midpoint heading 0.05.
    assert!((p.heading - 0.1).abs() < 1e-15);
    assert!((p.pos.x - 0.075 * 0.05f64.cos()).abs() < 1e-15);
    assert!((p.pos.y - 0.075 * 0.05f64.sin()).abs() < 1e-15);
}

#[test]
fn runs_are_deterministic() {
    let program = CompiledProgram::from_source(LISTING_1).unwrap();
    let mut w = World::new(12.0, 8.0);
    w.walls
        .push(Segment::new(Vec2::new(6.0, 2.0), Vec2::new(6.0, 6.0)));
    for (i, (x, y)) in [(2.0, 2.0), (2.0, 6.0), (10.0, 4.0)]
        .into_iter()
        .enumerate()
    {
        w.robots
            .push(RobotState::new(format!("r{i}"), x, y, i as f64));
    }
    let run = |mut w: World| {
        let mut traces = Vec::new();
        for _ in 0..100 {
            let (n, t) = step_world(&w, &program).unwrap();
            traces.push(t);
            w = n;
        }
        traces
    };
    assert_eq!(run(w.clone()), run(w));
}

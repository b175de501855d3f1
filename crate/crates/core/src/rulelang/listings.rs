//! The two reference programs every build must accept unchanged.

/// Obstacle avoidance: steer toward the distance-weighted mean ray angle.
pub const LISTING_1: &str = r#"FreedomMotion(radar) = WeightedAverage {
  x.distance -> x.angle :- x in radar
};
Robot(robot_name:, desire:, memory: "I am a robot") :-
  Sensor(robot_name:, sensor:),
  freedom = FreedomMotion(sensor.radar),
  speed = 0.5,
  desire = {
    left_engine:  speed - freedom + 0.1,
    right_engine: speed + freedom
  };
"#;

/// One Bellman-Ford relaxation round toward the "Home" beacon.
pub const LISTING_2: &str = r#"PosteriorHomeDistance(beacon) Min= d :-
  d == HomeDistance(beacon) |
  d == 0, beacon == "Home"  |
  d == HomeDistance(neighbor) + D(neighbor, beacon);
"#;

//! The JSON-Lines trace: one object per round, fields in a fixed order.

use std::collections::BTreeMap;

use declbot_core::engine::Desire;
use declbot_core::simcore::{RadarRay, RobotState, TraceRecord};
use serde::{Deserialize, Serialize};

use crate::json::value_to_json;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesireLine {
    pub left_engine: f64,
    pub right_engine: f64,
}

impl From<Desire> for DesireLine {
    fn from(d: Desire) -> Self {
        DesireLine {
            left_engine: d.left_engine,
            right_engine: d.right_engine,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotLine {
    pub name: String,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub desire: DesireLine,
    pub memory: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

impl From<&RobotState> for RobotLine {
    fn from(r: &RobotState) -> Self {
        RobotLine {
            name: r.name.clone(),
            x: r.pose.pos.x,
            y: r.pose.pos.y,
            heading: r.pose.heading,
            desire: r.last_desire.into(),
            memory: value_to_json(&r.memory),
            error: r.last_error.clone(),
            warning: r.last_warning.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaLine {
    pub id: String,
    pub state: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayLine {
    pub angle: f64,
    pub distance: f64,
    pub object: String,
    pub label: String,
}

impl From<&RadarRay> for RayLine {
    fn from(r: &RadarRay) -> Self {
        RayLine {
            angle: r.angle,
            distance: r.distance,
            object: r.object.as_str().to_string(),
            label: r.label.clone(),
        }
    }
}

pub fn radar_lines(radar: &BTreeMap<String, Vec<RadarRay>>) -> BTreeMap<String, Vec<RayLine>> {
    radar
        .iter()
        .map(|(name, rays)| (name.clone(), rays.iter().map(RayLine::from).collect()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceLine {
    pub step: u64,
    pub robots: Vec<RobotLine>,
    pub areas: Vec<AreaLine>,
    pub win: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radar: Option<BTreeMap<String, Vec<RayLine>>>,
}

impl TraceLine {
    pub fn new(t: &TraceRecord, include_radar: bool) -> Self {
        TraceLine {
            step: t.step,
            robots: t
                .robots
                .iter()
                .map(|r| RobotLine {
                    name: r.name.clone(),
                    x: r.x,
                    y: r.y,
                    heading: r.heading,
                    desire: r.desire.into(),
                    memory: value_to_json(&r.memory),
                    error: r.error.clone(),
                    warning: r.warning.clone(),
                })
                .collect(),
            areas: t
                .areas
                .iter()
                .map(|a| AreaLine {
                    id: a.id.clone(),
                    state: a.state.as_str().to_string(),
                })
                .collect(),
            win: t.win,
            radar: include_radar.then(|| radar_lines(&t.radar)),
        }
    }

    /// The line's text, newline included.
    pub fn to_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("trace lines always serialize");
        s.push('\n');
        s
    }
}

pub fn trace_line(t: &TraceRecord, include_radar: bool) -> String {
    TraceLine::new(t, include_radar).to_line()
}

#[cfg(test)]
mod tests {
    use super::*;
    use declbot_core::engine::CompiledProgram;
    use declbot_core::rulelang::listings::LISTING_1;
    use declbot_core::simcore::{step_world, RobotState, World};

    fn one_round() -> TraceRecord {
        let mut w = World::new(10.0, 10.0);
        w.robots.push(RobotState::new("r1", 5.0, 5.0, 0.3));
        let p = CompiledProgram::from_source(LISTING_1).unwrap();
        step_world(&w, &p).unwrap().1
    }

    #[test]
    fn field_order_is_fixed() {
        let line = trace_line(&one_round(), false);
        let keys = [
            "\"step\"",
            "\"robots\"",
            "\"name\"",
            "\"x\"",
            "\"y\"",
            "\"heading\"",
            "\"desire\"",
            "\"memory\"",
            "\"areas\"",
            "\"win\"",
        ];
        let pos: Vec<usize> = keys.iter().map(|k| line.find(k).unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]), "{line}");
        assert!(!line.contains("radar") && !line.contains("error"));
        assert!(line.ends_with('\n') && line.matches('\n').count() == 1);
    }

    #[test]
    fn radar_is_opt_in_and_round_trips() {
        let t = one_round();
        let line = trace_line(&t, true);
        let back: TraceLine = serde_json::from_str(&line).unwrap();
        assert_eq!(back, TraceLine::new(&t, true));
        assert_eq!(back.radar.as_ref().unwrap()["r1"].len(), 16);
        assert_eq!(back.to_line(), line);
    }
}

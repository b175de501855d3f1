//! Wire messages. Every message is a JSON object with a `type` tag.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::level::{AreaDoc, BeaconDoc, Bounds, LevelDocument, WallDoc, WinDoc};
use crate::trace::{RayLine, RobotLine};

fn one() -> u64 {
    1
}

fn default_interval() -> u64 {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientMessage {
    /// Either `name` (a level from the library) or a whole `level` document.
    LoadLevel {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        level: Option<Box<LevelDocument>>,
    },
    SetProgram {
        source: String,
    },
    Step {
        #[serde(default = "one")]
        count: u64,
    },
    Run {
        #[serde(default = "default_interval")]
        interval_ms: u64,
    },
    Pause {},
    Reset {},
    Edit {
        op: EditOp,
    },
    Inspect {
        robot: String,
        predicate: String,
    },
}

pub const CLIENT_TYPES: [&str; 8] = [
    "load_level",
    "set_program",
    "step",
    "run",
    "pause",
    "reset",
    "edit",
    "inspect",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EditOp {
    AddWall {
        x1: f64,
        y1: f64,
        x2: f64,
        y2: f64,
    },
    RemoveWall {
        index: usize,
    },
    MoveWall {
        index: usize,
        x1: f64,
        y1: f64,
        x2: f64,
        y2: f64,
    },
    AddBeacon {
        label: String,
        x: f64,
        y: f64,
    },
    RemoveBeacon {
        label: String,
    },
    MoveBeacon {
        label: String,
        x: f64,
        y: f64,
    },
    AddArea {
        area: AreaDoc,
    },
    RemoveArea {
        id: String,
    },
    MoveArea {
        id: String,
        x: f64,
        y: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        radius: Option<f64>,
    },
    AddRobot {
        name: String,
        x: f64,
        y: f64,
        #[serde(default)]
        heading: f64,
    },
    RemoveRobot {
        name: String,
    },
    MoveRobot {
        name: String,
        x: f64,
        y: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        heading: Option<f64>,
    },
    SetWin {
        win: Vec<WinDoc>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Parse,
    Validate,
    Runtime,
    Protocol,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticDoc {
    pub severity: String,
    pub message: String,
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaView {
    pub id: String,
    pub x: f64,
    pub y: f64,
    pub radius: f64,
    pub trigger_beacon: String,
    pub mode: String,
    pub state: String,
    pub color: String,
}

/// The whole observable session at one revision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatePayload {
    pub revision: u64,
    pub level: String,
    pub step: u64,
    pub max_steps: u64,
    /// `running`, `won` or `step_limit_reached`.
    pub status: String,
    pub win: bool,
    /// `paused` or `auto`.
    pub mode: String,
    pub bounds: Bounds,
    pub robot_radius: f64,
    pub beacon_radius: f64,
    pub robots: Vec<RobotLine>,
    pub areas: Vec<AreaView>,
    pub walls: Vec<WallDoc>,
    pub beacons: Vec<BeaconDoc>,
    pub win_zones: Vec<WinDoc>,
    /// What each robot's radar sees from its current pose.
    pub radar: BTreeMap<String, Vec<RayLine>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    State(Box<StatePayload>),
    Diagnostics {
        diagnostics: Vec<DiagnosticDoc>,
    },
    InspectResult {
        robot: String,
        predicate: String,
        rows: Vec<serde_json::Value>,
    },
    Win {
        step: u64,
    },
    Error {
        stage: Stage,
        message: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        line: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        column: Option<usize>,
    },
}

impl ServerMessage {
    pub fn error(stage: Stage, message: impl Into<String>) -> Self {
        ServerMessage::Error {
            stage,
            message: message.into(),
            line: None,
            column: None,
        }
    }

    /// State and win messages go to every client; the rest only to the sender.
    pub fn is_broadcast(&self) -> bool {
        matches!(self, ServerMessage::State(_) | ServerMessage::Win { .. })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("server messages always serialize")
    }
}

/// Decodes one client frame, or explains why it is not a valid message.
pub fn parse_client_message(text: &str) -> Result<ClientMessage, ServerMessage> {
    let raw: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| ServerMessage::error(Stage::Protocol, format!("malformed JSON: {e}")))?;
    let kind = match raw.get("type") {
        Some(serde_json::Value::String(k)) => k.clone(),
        _ => {
            return Err(ServerMessage::error(
                Stage::Protocol,
                "message must be an object with a string `type`",
            ))
        }
    };
    if !CLIENT_TYPES.contains(&kind.as_str()) {
        return Err(ServerMessage::error(
            Stage::Protocol,
            format!("unknown message type `{kind}`"),
        ));
    }
    serde_json::from_value(raw)
        .map_err(|e| ServerMessage::error(Stage::Protocol, format!("bad `{kind}` message: {e}")))
}

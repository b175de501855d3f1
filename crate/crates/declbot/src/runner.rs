//! Headless runs: step a world until it is won or out of steps.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::time::Instant;

use declbot_core::engine::CompiledProgram;
use declbot_core::simcore::{penetration_violations, step_world, Status, World};
use serde::Serialize;

use crate::trace::trace_line;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub final_status: String,
    pub steps_executed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub win_step: Option<u64>,
    /// Rounds in which each robot's program failed.
    pub errors: BTreeMap<String, u64>,
    /// Clearance violations seen over the run.
    pub penetration_events: u64,
    pub duration_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_path: Option<String>,
}

pub fn status_name(s: Status) -> &'static str {
    match s {
        Status::Running => "running",
        Status::Won(_) => "won",
        Status::StepLimitReached => "step_limit_reached",
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Overrides the world's own limit.
    pub max_steps: Option<u64>,
    pub include_radar: bool,
}

/// Steps `world` to completion, writing one trace line per round to `trace`.
pub fn run_world(
    mut world: World,
    program: &CompiledProgram,
    options: RunOptions,
    mut trace: Option<&mut dyn Write>,
) -> io::Result<(World, RunReport)> {
    if let Some(n) = options.max_steps {
        world.max_steps = n;
    }
    let start = Instant::now();
    let mut errors: BTreeMap<String, u64> =
        world.robots.iter().map(|r| (r.name.clone(), 0)).collect();
    let mut penetration_events = 0u64;
    let first_step = world.step;
    if world.step >= world.max_steps && world.status.is_running() {
        world.status = Status::StepLimitReached;
    }
    while let Ok((next, record)) = step_world(&world, program) {
        for r in &record.robots {
            if r.error.is_some() {
                *errors.entry(r.name.clone()).or_default() += 1;
            }
        }
        penetration_events += penetration_violations(&next).len() as u64;
        if let Some(out) = trace.as_mut() {
            out.write_all(trace_line(&record, options.include_radar).as_bytes())?;
        }
        world = next;
    }
    if let Some(out) = trace.as_mut() {
        out.flush()?;
    }
    let report = RunReport {
        final_status: status_name(world.status).into(),
        steps_executed: world.step - first_step,
        win_step: match world.status {
            Status::Won(s) => Some(s),
            _ => None,
        },
        errors,
        penetration_events,
        duration_ms: start.elapsed().as_secs_f64() * 1000.0,
        trace_path: None,
    };
    Ok((world, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use declbot_core::rulelang::listings::LISTING_1;
    use declbot_core::simcore::RobotState;

    #[test]
    fn runs_to_the_limit_and_traces_every_round() {
        let mut w = World::new(10.0, 10.0);
        w.robots.push(RobotState::new("r1", 5.0, 5.0, 0.0));
        let p = CompiledProgram::from_source(LISTING_1).unwrap();
        let mut out = Vec::new();
        let opts = RunOptions {
            max_steps: Some(25),
            include_radar: false,
        };
        let (end, report) = run_world(w, &p, opts, Some(&mut out)).unwrap();
        assert_eq!(end.step, 25);
        assert_eq!(report.final_status, "step_limit_reached");
        assert_eq!(report.steps_executed, 25);
        assert_eq!(report.win_step, None);
        assert_eq!(report.errors["r1"], 0);
        assert_eq!(String::from_utf8(out).unwrap().lines().count(), 25);
    }

    #[test]
    fn counts_program_errors() {
        let mut w = World::new(10.0, 10.0);
        w.robots.push(RobotState::new("r1", 5.0, 5.0, 0.0));
        let p = CompiledProgram::from_source("P(x: 1);").unwrap();
        let opts = RunOptions {
            max_steps: Some(3),
            ..Default::default()
        };
        let (_, report) = run_world(w, &p, opts, None).unwrap();
        assert_eq!(report.errors["r1"], 3);
    }
}

//! Level files, traces, the `simctl` command line and the control bridge on
//! top of `declbot-core`.

pub mod bridge;
pub mod cli;
pub mod json;
pub mod level;
pub mod runner;
pub mod scenarios;
pub mod trace;

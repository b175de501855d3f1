//! `simctl`: headless runs, program checks, trace replay and the bridge server.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use declbot_core::engine::{CompileError, CompiledProgram};

use crate::level::LevelDocument;
use crate::runner::{run_world, RunOptions};
use crate::scenarios::{
    available_names, find_scenario, level_dir, load_level_file, ScenarioBundle, ScenarioError,
};
use crate::trace::TraceLine;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DIVERGED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "simctl",
    version,
    about = "Run, check and serve robot simulations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a level headless until it is won or out of steps.
    Run {
        /// A builtin level name or a `.level.json` path.
        #[arg(long)]
        level: String,
        /// Program file; defaults to the level's own program.
        #[arg(long)]
        program: Option<PathBuf>,
        #[arg(long)]
        max_steps: Option<u64>,
        /// Write a JSON-Lines trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Include every robot's radar in the trace.
        #[arg(long)]
        radar_trace: bool,
    },
    /// Parse and validate a program.
    Check {
        #[arg(long)]
        program: PathBuf,
    },
    /// Re-run a traced simulation and compare it byte for byte.
    Replay {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        level: String,
        #[arg(long)]
        program: Option<PathBuf>,
    },
    /// Serve the control bridge over HTTP and WebSocket.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Directory with the cockpit bundle, served under `/`.
        #[arg(long = "static")]
        static_dir: Option<PathBuf>,
        #[arg(long, default_value = "level01_open_field")]
        level: String,
        #[arg(long)]
        program: Option<PathBuf>,
    },
    /// List the available levels.
    Levels,
}

/// A failure that ends the command with an exit code.
struct Failure(i32, String);

type CmdResult = Result<i32, Failure>;

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(EXIT_INVALID, msg.into())
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure(EXIT_IO, format!("{}: {e}", path.display()))
}

/// Parses `args` (program name first) and runs the command.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
        }
    };
    let result = match cli.command {
        Command::Run {
            level,
            program,
            max_steps,
            trace,
            radar_trace,
        } => cmd_run(
            &level,
            program.as_deref(),
            max_steps,
            trace.as_deref(),
            radar_trace,
            out,
            err,
        ),
        Command::Check { program } => cmd_check(&program, out, err),
        Command::Replay {
            trace,
            level,
            program,
        } => cmd_replay(&trace, &level, program.as_deref(), out),
        Command::Serve {
            port,
            static_dir,
            level,
            program,
        } => cmd_serve(port, static_dir, &level, program.as_deref(), err),
        Command::Levels => cmd_levels(out),
    };
    match result {
        Ok(code) => code,
        Err(Failure(code, msg)) => {
            let _ = writeln!(err, "simctl: {msg}");
            code
        }
    }
}

/// A builtin name, a name in the level directory, or a file path.
pub fn resolve_level(level: &str) -> Result<ScenarioBundle, ScenarioError> {
    let path = Path::new(level);
    if path.is_file() || level.ends_with(".json") {
        let (doc, program) = load_level_file(path)?;
        return Ok(ScenarioBundle::new(doc, program.unwrap_or_default()));
    }
    find_scenario(level)
}

fn level_failure(e: ScenarioError) -> Failure {
    match e {
        ScenarioError::Io(path, e) => io_failure(&path, e),
        other => invalid(other.to_string()),
    }
}

fn load_inputs(level: &str, program: Option<&Path>) -> Result<(LevelDocument, String), Failure> {
    let bundle = resolve_level(level).map_err(level_failure)?;
    let source = match program {
        Some(p) => std::fs::read_to_string(p).map_err(|e| io_failure(p, e))?,
        None if !bundle.program_source.is_empty() => bundle.program_source,
        None => {
            return Err(invalid(format!(
                "level `{level}` has no program; pass --program"
            )))
        }
    };
    Ok((bundle.level, source))
}

fn compile(source: &str, origin: &str) -> Result<CompiledProgram, Failure> {
    CompiledProgram::from_source(source).map_err(|e| invalid(describe_compile_error(&e, origin)))
}

fn describe_compile_error(e: &CompileError, origin: &str) -> String {
    match e {
        CompileError::Syntax(s) => format!("{origin}:{s}"),
        CompileError::Invalid(diags) => diags
            .iter()
            .map(|d| format!("{origin}:{d}"))
            .collect::<Vec<_>>()
            .join("\n"),
    }
}

fn origin_of(program: Option<&Path>, level: &str) -> String {
    match program {
        Some(p) => p.display().to_string(),
        None => match level.strip_suffix(crate::scenarios::LEVEL_SUFFIX) {
            Some(stem) => format!("{stem}{}", crate::scenarios::PROGRAM_SUFFIX),
            None => format!("{level}{}", crate::scenarios::PROGRAM_SUFFIX),
        },
    }
}

fn cmd_run(
    level: &str,
    program: Option<&Path>,
    max_steps: Option<u64>,
    trace: Option<&Path>,
    include_radar: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CmdResult {
    let (doc, source) = load_inputs(level, program)?;
    let compiled = compile(&source, &origin_of(program, level))?;
    let options = RunOptions {
        max_steps,
        include_radar,
    };
    let (_, mut report) = match trace {
        Some(path) => {
            let file = File::create(path).map_err(|e| io_failure(path, e))?;
            let mut w = BufWriter::new(file);
            let r = run_world(doc.to_world(), &compiled, options, Some(&mut w))
                .map_err(|e| io_failure(path, e))?;
            w.into_inner()
                .map_err(|e| io_failure(path, e.into_error()))?
                .sync_all()
                .map_err(|e| io_failure(path, e))?;
            r
        }
        None => run_world(doc.to_world(), &compiled, options, None)
            .map_err(|e| Failure(EXIT_IO, e.to_string()))?,
    };
    report.trace_path = trace.map(|p| p.display().to_string());
    if report.penetration_events > 0 {
        let _ = writeln!(
            err,
            "warning: {} penetration events",
            report.penetration_events
        );
    }
    for (robot, n) in report.errors.iter().filter(|(_, n)| **n > 0) {
        let _ = writeln!(err, "warning: robot `{robot}` failed in {n} rounds");
    }
    let json = serde_json::to_string_pretty(&report).expect("reports serialize");
    writeln!(out, "{json}").map_err(|e| Failure(EXIT_IO, e.to_string()))?;
    Ok(EXIT_OK)
}

fn cmd_check(program: &Path, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let source = std::fs::read_to_string(program).map_err(|e| io_failure(program, e))?;
    match CompiledProgram::from_source(&source) {
        Ok(p) => {
            let _ = writeln!(
                out,
                "{}: ok, {} rules",
                program.display(),
                p.program().rules.len()
            );
            Ok(EXIT_OK)
        }
        Err(e) => {
            let _ = writeln!(
                err,
                "{}",
                describe_compile_error(&e, &program.display().to_string())
            );
            Ok(EXIT_INVALID)
        }
    }
}

fn cmd_replay(trace: &Path, level: &str, program: Option<&Path>, out: &mut dyn Write) -> CmdResult {
    let bytes = std::fs::read(trace).map_err(|e| io_failure(trace, e))?;
    let text = String::from_utf8(bytes)
        .map_err(|_| Failure(EXIT_IO, format!("{}: trace is not UTF-8", trace.display())))?;
    if !text.is_empty() && !text.ends_with('\n') {
        return Err(Failure(
            EXIT_IO,
            format!("{}: trace ends mid-line", trace.display()),
        ));
    }
    let recorded: Vec<&str> = text.split_inclusive('\n').collect();
    let mut include_radar = false;
    for (i, line) in recorded.iter().enumerate() {
        let parsed: TraceLine = serde_json::from_str(line).map_err(|e| {
            Failure(
                EXIT_IO,
                format!("{}: line {}: corrupt trace: {e}", trace.display(), i + 1),
            )
        })?;
        if i == 0 {
            include_radar = parsed.radar.is_some();
        }
    }

    let (doc, source) = load_inputs(level, program)?;
    let compiled = compile(&source, &origin_of(program, level))?;
    let options = RunOptions {
        max_steps: Some(recorded.len() as u64),
        include_radar,
    };
    let mut buf = Vec::new();
    run_world(doc.to_world(), &compiled, options, Some(&mut buf))
        .map_err(|e| Failure(EXIT_IO, e.to_string()))?;
    let rerun = String::from_utf8(buf).expect("traces are UTF-8");
    let rerun: Vec<&str> = rerun.split_inclusive('\n').collect();
    for i in 0..recorded.len().max(rerun.len()) {
        if recorded.get(i) != rerun.get(i) {
            let _ = writeln!(out, "diverged at step {}", i + 1);
            return Ok(EXIT_DIVERGED);
        }
    }
    let _ = writeln!(out, "replay matches: {} steps", recorded.len());
    Ok(EXIT_OK)
}

fn cmd_serve(
    port: u16,
    static_dir: Option<PathBuf>,
    level: &str,
    program: Option<&Path>,
    err: &mut dyn Write,
) -> CmdResult {
    let (doc, source) = load_inputs(level, program)?;
    compile(&source, &origin_of(program, level))?;
    let session = crate::bridge::Session::new(doc, Some(source));
    let addr = SocketAddr::from(([0, 0, 0, 0], port));
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure(EXIT_IO, e.to_string()))?;
    let _ = writeln!(err, "serving on http://{addr}");
    runtime
        .block_on(async move {
            let listener = tokio::net::TcpListener::bind(addr).await?;
            crate::bridge::serve(listener, session, static_dir).await
        })
        .map_err(|e| Failure(EXIT_IO, e.to_string()))?;
    Ok(EXIT_OK)
}

fn cmd_levels(out: &mut dyn Write) -> CmdResult {
    if let Some(dir) = level_dir() {
        let _ = writeln!(out, "# {}", dir.display());
    }
    for name in available_names().map_err(level_failure)? {
        let _ = writeln!(out, "{name}");
    }
    Ok(EXIT_OK)
}

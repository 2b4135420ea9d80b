//! Sim scripts: one command per line.
//!
//! ```text
//! open
//! place coke 0
//! wait 8000
//! close
//! wait 3000
//! occlude 2 2500
//! ```

use std::fmt;

use thiserror::Error;

use super::{CameraFrame, FridgeSim, ItemCatalog, SimOutput};
use crate::detection::trace::{self, TraceRecord};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SimCommand {
    Open,
    Close,
    Place { item: String, position: usize },
    Remove { position: usize },
    Wait { ms: u64 },
    Occlude { position: usize, ms: u64 },
}

impl fmt::Display for SimCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimCommand::Open => write!(f, "open"),
            SimCommand::Close => write!(f, "close"),
            SimCommand::Place { item, position } => write!(f, "place {item} {position}"),
            SimCommand::Remove { position } => write!(f, "remove {position}"),
            SimCommand::Wait { ms } => write!(f, "wait {ms}"),
            SimCommand::Occlude { position, ms } => write!(f, "occlude {position} {ms}"),
        }
    }
}

/// A script failure. `step` is the 1-based index of the offending command
/// (or line, when parsing).
#[derive(Debug, Error, PartialEq)]
#[error("step {step} ({command}): {message}")]
pub struct ScriptError {
    pub step: usize,
    pub command: String,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActivityTiming {
    pub activity: u64,
    pub opened_at: u64,
    pub closed_at: u64,
}

impl ActivityTiming {
    pub fn open_ms(&self) -> u64 {
        self.closed_at - self.opened_at
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScriptRun {
    pub trace: Vec<TraceRecord>,
    pub frames: Vec<CameraFrame>,
    pub activities: Vec<ActivityTiming>,
}

impl ScriptRun {
    pub fn trace_text(&self) -> String {
        trace::format(&self.trace)
    }
}

pub fn parse_script(text: &str) -> Result<Vec<SimCommand>, ScriptError> {
    let mut commands = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: &str| ScriptError {
            step: idx + 1,
            command: line.to_string(),
            message: message.to_string(),
        };
        let words: Vec<&str> = line.split_whitespace().collect();
        let num = |s: &str| s.parse::<u64>().map_err(|_| err("expected a non-negative integer"));
        let cmd = match words.as_slice() {
            ["open"] => SimCommand::Open,
            ["close"] => SimCommand::Close,
            ["place", item, pos] => SimCommand::Place {
                item: item.to_string(),
                position: num(pos)? as usize,
            },
            ["remove", pos] => SimCommand::Remove {
                position: num(pos)? as usize,
            },
            ["wait", ms] => SimCommand::Wait { ms: num(ms)? },
            ["occlude", pos, ms] => SimCommand::Occlude {
                position: num(pos)? as usize,
                ms: num(ms)?,
            },
            _ => return Err(err("unknown or malformed command")),
        };
        commands.push(cmd);
    }
    Ok(commands)
}

/// Execute `commands` against `sim`, recording a replayable trace and the
/// door-open duration of every activity.
pub fn run_script(
    sim: &mut FridgeSim,
    catalog: &ItemCatalog,
    commands: &[SimCommand],
) -> Result<ScriptRun, ScriptError> {
    let mut run = ScriptRun::default();
    for (idx, cmd) in commands.iter().enumerate() {
        let fail = |message: String| ScriptError {
            step: idx + 1,
            command: cmd.to_string(),
            message,
        };
        match cmd {
            SimCommand::Open => {
                let out = sim.open_door().map_err(|e| fail(e.to_string()))?;
                record(&mut run, out);
            }
            SimCommand::Close => {
                let out = sim.close_door().map_err(|e| fail(e.to_string()))?;
                record(&mut run, out);
            }
            SimCommand::Place { item, position } => {
                let profile = catalog
                    .get(item)
                    .cloned()
                    .ok_or_else(|| fail(format!("unknown item {item:?}")))?;
                sim.place(profile, *position)
                    .map_err(|e| fail(e.to_string()))?;
            }
            SimCommand::Remove { position } => {
                sim.remove(*position).map_err(|e| fail(e.to_string()))?;
            }
            SimCommand::Wait { ms } => {
                for out in sim.step(*ms) {
                    record(&mut run, out);
                }
            }
            SimCommand::Occlude { position, ms } => {
                sim.occlude(*position, *ms)
                    .map_err(|e| fail(e.to_string()))?;
            }
        }
    }
    Ok(run)
}

fn record(run: &mut ScriptRun, out: SimOutput) {
    match out {
        SimOutput::Reading(r) => run.trace.push(TraceRecord::Reading(r)),
        SimOutput::DoorOpened { at, .. } => run.trace.push(TraceRecord::DoorOpen { at }),
        SimOutput::DoorClosed { at, activity, open_ms } => {
            run.trace.push(TraceRecord::DoorClose { at });
            run.activities.push(ActivityTiming {
                activity,
                opened_at: at - open_ms,
                closed_at: at,
            });
        }
        SimOutput::Frame(f) => run.frames.push(f),
    }
}

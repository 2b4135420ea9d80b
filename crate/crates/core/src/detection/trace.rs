//! Line-oriented trace files.
//!
//! ```text
//! # comment
//! 0 door_open
//! 1000 reading 2 400
//! 2500 recognized coke
//! 2600 recognized orange juice act=7
//! 9000 door_close
//! ```
//!
//! Each record is `t_ms kind args`. `recognized` takes the rest of the line
//! as the item name, with an optional trailing `act=N`.

use std::fmt;

use thiserror::Error;

use super::{DetectionEngine, DetectionError, DetectionEvent, EngineInput, SensorReading, Timestamp};

#[derive(Debug, Clone, PartialEq)]
pub enum TraceRecord {
    DoorOpen {
        at: Timestamp,
    },
    DoorClose {
        at: Timestamp,
    },
    Reading(SensorReading),
    Recognized {
        at: Timestamp,
        name: String,
        activity_id: Option<u64>,
    },
}

impl TraceRecord {
    pub fn timestamp(&self) -> Timestamp {
        match self {
            TraceRecord::DoorOpen { at }
            | TraceRecord::DoorClose { at }
            | TraceRecord::Recognized { at, .. } => *at,
            TraceRecord::Reading(r) => r.timestamp,
        }
    }

    pub fn to_input(&self) -> EngineInput {
        match self {
            TraceRecord::DoorOpen { at } => EngineInput::DoorOpen { at: *at },
            TraceRecord::DoorClose { at } => EngineInput::DoorClose { at: *at },
            TraceRecord::Reading(r) => EngineInput::Reading(*r),
            TraceRecord::Recognized {
                at,
                name,
                activity_id,
            } => EngineInput::Recognized {
                name: name.clone(),
                activity_id: *activity_id,
                at: *at,
            },
        }
    }
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceRecord::DoorOpen { at } => write!(f, "{at} door_open"),
            TraceRecord::DoorClose { at } => write!(f, "{at} door_close"),
            TraceRecord::Reading(r) => {
                write!(f, "{} reading {} {}", r.timestamp, r.position, r.value)
            }
            TraceRecord::Recognized {
                at,
                name,
                activity_id,
            } => {
                write!(f, "{at} recognized {name}")?;
                if let Some(act) = activity_id {
                    write!(f, " act={act}")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TraceError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {source}")]
    Replay {
        line: usize,
        #[source]
        source: DetectionError,
    },
}

fn parse_err(line: usize, message: impl Into<String>) -> TraceError {
    TraceError::Parse {
        line,
        message: message.into(),
    }
}

/// Parse a whole trace. Blank lines and `#` comments are skipped; line
/// numbers in errors are 1-based.
pub fn parse(text: &str) -> Result<Vec<(usize, TraceRecord)>, TraceError> {
    let mut records = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        records.push((lineno, parse_line(lineno, line)?));
    }
    Ok(records)
}

fn parse_line(lineno: usize, line: &str) -> Result<TraceRecord, TraceError> {
    let mut parts = line.split_whitespace();
    let at: Timestamp = parts
        .next()
        .ok_or_else(|| parse_err(lineno, "missing timestamp"))?
        .parse()
        .map_err(|_| parse_err(lineno, "timestamp must be an unsigned integer"))?;
    let kind = parts
        .next()
        .ok_or_else(|| parse_err(lineno, "missing record kind"))?;
    let args: Vec<&str> = parts.collect();
    match kind {
        "door_open" | "door_close" => {
            if !args.is_empty() {
                return Err(parse_err(lineno, format!("{kind} takes no arguments")));
            }
            Ok(if kind == "door_open" {
                TraceRecord::DoorOpen { at }
            } else {
                TraceRecord::DoorClose { at }
            })
        }
        "reading" => {
            let [pos, value] = args.as_slice() else {
                return Err(parse_err(lineno, "reading takes <position> <value>"));
            };
            let position = pos
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad position {pos:?}")))?;
            let value: f64 = value
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad value {value:?}")))?;
            if !(value.is_finite() && value >= 0.0) {
                return Err(parse_err(lineno, "reading value must be finite and >= 0"));
            }
            Ok(TraceRecord::Reading(SensorReading {
                position,
                value,
                timestamp: at,
            }))
        }
        "recognized" => {
            let mut words = args;
            let mut activity_id = None;
            if let Some(last) = words.last() {
                if let Some(act) = last.strip_prefix("act=") {
                    activity_id = Some(
                        act.parse()
                            .map_err(|_| parse_err(lineno, format!("bad activity id {act:?}")))?,
                    );
                    words.pop();
                }
            }
            if words.is_empty() {
                return Err(parse_err(lineno, "recognized needs an item name"));
            }
            Ok(TraceRecord::Recognized {
                at,
                name: words.join(" "),
                activity_id,
            })
        }
        other => Err(parse_err(lineno, format!("unknown record kind {other:?}"))),
    }
}

pub fn format(records: &[TraceRecord]) -> String {
    let mut out = String::new();
    for record in records {
        out.push_str(&record.to_string());
        out.push('\n');
    }
    out
}

/// Feed a parsed trace through an engine and collect every event.
pub fn replay(
    engine: &mut DetectionEngine,
    records: &[(usize, TraceRecord)],
) -> Result<Vec<DetectionEvent>, TraceError> {
    let mut events = Vec::new();
    for (line, record) in records {
        let produced = engine
            .handle(record.to_input())
            .map_err(|source| TraceError::Replay {
                line: *line,
                source,
            })?;
        events.extend(produced);
    }
    Ok(events)
}

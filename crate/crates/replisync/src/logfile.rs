//! JSON-lines files: session logs (a header line, then one event per line)
//! and network traces (one delivered envelope per line).

use std::fmt::Write as _;

use replisync_core::net::{Trace, TraceEntry};
use replisync_core::scenario::{Condition, LogEvent, SessionLog};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const LOG_SCHEMA: &str = "replisync.session-log/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub schema: String,
    pub session_id: String,
    pub condition: Condition,
    pub seed: u64,
}

#[derive(Debug, Error)]
pub enum JsonlError {
    #[error("line {line}: {source}")]
    Line { line: usize, source: serde_json::Error },
    #[error("missing header line")]
    Empty,
    #[error("unsupported schema {0:?}")]
    Schema(String),
}

fn line<T: Serialize>(out: &mut String, value: &T) {
    let json = serde_json::to_string(value).expect("in-memory values serialize");
    writeln!(out, "{json}").expect("writing to a String");
}

pub fn write_log(session_id: &str, log: &SessionLog) -> String {
    let mut out = String::new();
    let header =
        LogHeader { schema: LOG_SCHEMA.into(), session_id: session_id.into(), condition: log.condition, seed: log.seed };
    line(&mut out, &header);
    for e in &log.events {
        line(&mut out, e);
    }
    out
}

pub fn read_log(text: &str) -> Result<(LogHeader, SessionLog), JsonlError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (i, first) = lines.next().ok_or(JsonlError::Empty)?;
    let header: LogHeader = serde_json::from_str(first).map_err(|source| JsonlError::Line { line: i + 1, source })?;
    if header.schema != LOG_SCHEMA {
        return Err(JsonlError::Schema(header.schema));
    }
    let events = lines
        .map(|(i, l)| serde_json::from_str::<LogEvent>(l).map_err(|source| JsonlError::Line { line: i + 1, source }))
        .collect::<Result<Vec<_>, _>>()?;
    let log = SessionLog { condition: header.condition, seed: header.seed, events };
    Ok((header, log))
}

pub fn write_trace(trace: &Trace) -> String {
    let mut out = String::new();
    for entry in trace {
        line(&mut out, entry);
    }
    out
}

pub fn read_trace(text: &str) -> Result<Trace, JsonlError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str::<TraceEntry>(l).map_err(|source| JsonlError::Line { line: i + 1, source }))
        .collect()
}

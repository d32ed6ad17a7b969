//! Error taxonomy, ponderation and block timings computed from session logs.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Add;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::log::{Condition, EventKind, SessionLog};
use crate::scene::NodeId;
use crate::session::BlockKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorType {
    /// Wrong valve identified.
    Simple,
    /// Wrong valve manipulated; counts double.
    Critical,
    /// Instruction had to be repeated.
    Repetition,
}

impl ErrorType {
    pub fn weight(self) -> u64 {
        match self {
            ErrorType::Simple | ErrorType::Repetition => 1,
            ErrorType::Critical => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub t_ms: u64,
    pub error_type: ErrorType,
    /// The valve the Expert asked for.
    pub valve: NodeId,
    pub block: String,
}

/// Errors of one action against `target`. A wrong manipulation is a single
/// Critical error even when the identification was also wrong.
pub fn classify(
    target: &NodeId,
    identified: Option<&NodeId>,
    manipulated: Option<&NodeId>,
    repeat_requested: bool,
) -> Vec<ErrorType> {
    let mut out = Vec::new();
    match manipulated {
        Some(m) if m != target => out.push(ErrorType::Critical),
        _ => {
            if identified.is_some_and(|i| i != target) {
                out.push(ErrorType::Simple);
            }
        }
    }
    if repeat_requested {
        out.push(ErrorType::Repetition);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ErrorCounts {
    pub simple: u64,
    pub critical: u64,
    pub repetition: u64,
}

impl ErrorCounts {
    pub const fn new(simple: u64, critical: u64, repetition: u64) -> Self {
        ErrorCounts { simple, critical, repetition }
    }

    pub fn raw_total(&self) -> u64 {
        self.simple + self.critical + self.repetition
    }

    pub fn record(&mut self, t: ErrorType) {
        match t {
            ErrorType::Simple => self.simple += 1,
            ErrorType::Critical => self.critical += 1,
            ErrorType::Repetition => self.repetition += 1,
        }
    }
}

impl Add for ErrorCounts {
    type Output = ErrorCounts;
    fn add(self, o: ErrorCounts) -> ErrorCounts {
        ErrorCounts::new(self.simple + o.simple, self.critical + o.critical, self.repetition + o.repetition)
    }
}

/// Simple and Repetition count once, Critical twice.
pub fn weighted_total(c: &ErrorCounts) -> u64 {
    c.simple * ErrorType::Simple.weight()
        + c.critical * ErrorType::Critical.weight()
        + c.repetition * ErrorType::Repetition.weight()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("malformed log: {0}")]
    Log(&'static str),
    #[error("baseline must be positive")]
    NonPositiveBaseline,
}

/// Error records in log order. Each log event is one action, so a wrong
/// manipulation yields only a Critical record.
pub fn errors(log: &SessionLog) -> Vec<ErrorRecord> {
    let mut out = Vec::new();
    for e in &log.events {
        let (target, identified, manipulated, repeat) = match &e.kind {
            EventKind::Identify { valve, target, .. } => (target, Some(valve), None, false),
            EventKind::Manipulate { valve, target, .. } => (target, None, Some(valve), false),
            EventKind::RepeatRequest { target } => (target, None, None, true),
            _ => continue,
        };
        for error_type in classify(target, identified, manipulated, repeat) {
            out.push(ErrorRecord {
                t_ms: e.t_ms,
                error_type,
                valve: target.clone(),
                block: e.block.clone().unwrap_or_default(),
            });
        }
    }
    out
}

pub fn count(records: &[ErrorRecord]) -> ErrorCounts {
    let mut c = ErrorCounts::default();
    for r in records {
        c.record(r.error_type);
    }
    c
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockTiming {
    pub block: String,
    pub kind: BlockKind,
    pub duration_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionTimes {
    pub blocks: Vec<BlockTiming>,
    pub per_kind_s: BTreeMap<BlockKind, f64>,
    /// Call start to call end.
    pub total_s: f64,
}

impl SessionTimes {
    pub fn kind_s(&self, kind: BlockKind) -> f64 {
        self.per_kind_s.get(&kind).copied().unwrap_or(0.0)
    }
}

/// Breakpoint-to-breakpoint block durations and the call span.
pub fn block_times(log: &SessionLog) -> Result<SessionTimes, MetricsError> {
    log.check().map_err(MetricsError::Log)?;
    let start = log.events.first().map_or(0, |e| e.t_ms);
    let end = log.events.last().map_or(0, |e| e.t_ms);
    let mut blocks = Vec::new();
    let mut per_kind_s = BTreeMap::new();
    let mut open: Option<(String, BlockKind, u64)> = None;
    for e in &log.events {
        if let EventKind::Breakpoint { block, block_kind, open: is_open } = &e.kind {
            if *is_open {
                open = Some((block.clone(), *block_kind, e.t_ms));
            } else if let Some((id, kind, t0)) = open.take() {
                let duration_s = (e.t_ms - t0) as f64 / 1000.0;
                *per_kind_s.entry(kind).or_insert(0.0) += duration_s;
                blocks.push(BlockTiming { block: id, kind, duration_s });
            }
        }
    }
    Ok(SessionTimes { blocks, per_kind_s, total_s: (end - start) as f64 / 1000.0 })
}

/// Relative reduction from `baseline` to `treatment`, as a fraction.
pub fn percent_improvement(baseline: f64, treatment: f64) -> Result<f64, MetricsError> {
    if baseline.is_nan() || baseline <= 0.0 {
        return Err(MetricsError::NonPositiveBaseline);
    }
    Ok((baseline - treatment) / baseline)
}

/// One row of the metrics CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMetrics {
    pub session_id: String,
    pub condition: Condition,
    pub seed: u64,
    pub total_s: f64,
    pub one_handed_s: f64,
    pub two_handed_s: f64,
    pub simple: u64,
    pub critical: u64,
    pub repetition: u64,
    pub weighted_total: u64,
}

impl SessionMetrics {
    pub fn from_log(session_id: impl Into<String>, log: &SessionLog) -> Result<Self, MetricsError> {
        let times = block_times(log)?;
        let c = count(&errors(log));
        Ok(SessionMetrics {
            session_id: session_id.into(),
            condition: log.condition,
            seed: log.seed,
            total_s: times.total_s,
            one_handed_s: times.kind_s(BlockKind::OneHanded),
            two_handed_s: times.kind_s(BlockKind::TwoHanded),
            simple: c.simple,
            critical: c.critical,
            repetition: c.repetition,
            weighted_total: weighted_total(&c),
        })
    }

    pub fn counts(&self) -> ErrorCounts {
        ErrorCounts::new(self.simple, self.critical, self.repetition)
    }
}

/// Error counts split by the kind of block they happened in.
pub fn errors_by_kind(log: &SessionLog) -> BTreeMap<BlockKind, ErrorCounts> {
    let kinds: BTreeMap<&str, BlockKind> = log
        .events
        .iter()
        .filter_map(|e| match &e.kind {
            EventKind::Breakpoint { block, block_kind, .. } => Some((block.as_str(), *block_kind)),
            _ => None,
        })
        .collect();
    let mut out = BTreeMap::new();
    for r in errors(log) {
        if let Some(kind) = kinds.get(r.block.as_str()) {
            out.entry(*kind).or_insert_with(ErrorCounts::default).record(r.error_type);
        }
    }
    out
}

/// Per-participant average of a condition's summed counts.
pub fn average_weighted(total: &ErrorCounts, participants: usize) -> f64 {
    weighted_total(total) as f64 / participants as f64
}

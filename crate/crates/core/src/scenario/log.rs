//! The timestamped record of one simulated session, as seen by the test
//! conductor on the Operator side.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::scene::{NodeId, ValveState};
use crate::session::{BlockKind, Directive};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    Tablet,
    Hmd,
}

impl Condition {
    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Tablet => "tablet",
            Condition::Hmd => "hmd",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    CallStart,
    Instruction { text: String, directive: Directive },
    /// A received commit turned on the motion indication of `valve`.
    ReplicaIndication { valve: NodeId },
    /// A commit from the host reached the Operator.
    SyncCommit { new_version: u64 },
    Identify { valve: NodeId, target: NodeId, correct: bool },
    Manipulate { valve: NodeId, target: NodeId, state: ValveState, correct: bool },
    /// A wrongly manipulated valve was put back.
    Revert { valve: NodeId, target: NodeId },
    RepeatRequest { target: NodeId },
    Breakpoint { block: String, block_kind: BlockKind, open: bool },
    TemperatureReport { celsius: f64 },
    CallEnd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEvent {
    pub t_ms: u64,
    /// Block open at the time of the event, if any.
    #[serde(rename = "in_block", default, skip_serializing_if = "Option::is_none")]
    pub block: Option<String>,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionLog {
    pub condition: Condition,
    pub seed: u64,
    pub events: Vec<LogEvent>,
}

impl SessionLog {
    /// Checks ordering and framing: starts with `CallStart`, ends with
    /// `CallEnd`, timestamps non-decreasing, every opened block closed.
    pub fn check(&self) -> Result<(), &'static str> {
        match (self.events.first(), self.events.last()) {
            (Some(f), Some(l)) if f.kind == EventKind::CallStart && l.kind == EventKind::CallEnd => {}
            _ => return Err("log must start with call_start and end with call_end"),
        }
        if self.events.windows(2).any(|w| w[0].t_ms > w[1].t_ms) {
            return Err("timestamps decrease");
        }
        let mut open: Option<&str> = None;
        for e in &self.events {
            if let EventKind::Breakpoint { block, open: is_open, .. } = &e.kind {
                match (open, is_open) {
                    (None, true) => open = Some(block),
                    (Some(b), false) if b == block => open = None,
                    _ => return Err("unbalanced breakpoints"),
                }
            }
        }
        if open.is_some() {
            return Err("block left open");
        }
        Ok(())
    }
}

//! The vocal channel between Expert and Operator, as structured messages.
//! Audio itself is out of scope; an instruction carries the text that would
//! be spoken plus a machine-readable directive.

use alloc::format;
use alloc::string::String;

use serde::{Deserialize, Serialize};

use crate::scene::{Handedness, NodeId, ValveState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    OneHanded,
    TwoHanded,
    NoManipulation,
}

impl From<Handedness> for BlockKind {
    fn from(h: Handedness) -> Self {
        match h {
            Handedness::OneHanded => BlockKind::OneHanded,
            Handedness::TwoHanded => BlockKind::TwoHanded,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "act", rename_all = "snake_case")]
pub enum Directive {
    /// Task boundary; the test conductor records a breakpoint on it.
    Boundary { block: String, kind: BlockKind, open: bool },
    Locate { valve: NodeId, block: String, handedness: Handedness },
    Manipulate { valve: NodeId, state: ValveState, handedness: Handedness },
    Revert { valve: NodeId, handedness: Handedness },
    Describe { block: String, prompt: String },
    ReportTemperature,
    Summarize,
}

impl Directive {
    pub fn spoken(&self) -> String {
        match self {
            Directive::Boundary { block, open: true, .. } => format!("Starting task {block}."),
            Directive::Boundary { block, open: false, .. } => format!("Task {block} is done."),
            Directive::Locate { valve, .. } => format!("Find valve {valve}."),
            Directive::Manipulate { valve, state: ValveState::Open, .. } => format!("Open valve {valve}."),
            Directive::Manipulate { valve, state: ValveState::Closed, .. } => format!("Close valve {valve}."),
            Directive::Revert { valve, .. } => format!("That was valve {valve}, put it back."),
            Directive::Describe { prompt, .. } => prompt.clone(),
            Directive::ReportTemperature => "What is the hot water outlet temperature?".into(),
            Directive::Summarize => "We are done, you can end the call.".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instruction {
    pub text: String,
    pub directive: Directive,
}

impl From<Directive> for Instruction {
    fn from(directive: Directive) -> Self {
        Instruction { text: directive.spoken(), directive }
    }
}

/// What the Operator says back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "act", rename_all = "snake_case")]
pub enum Feedback {
    RepeatRequest,
    Identified { valve: NodeId },
    Manipulated { valve: NodeId },
    Reverted { valve: NodeId },
    Described { block: String },
    Temperature { celsius: f64 },
}

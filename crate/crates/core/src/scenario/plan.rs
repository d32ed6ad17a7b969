//! The Expert's two-part inspection script.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;
use crate::scene::{Handedness, NodeId, SceneModel, ValveState};
use crate::session::BlockKind;

/// Operations per one-handed block.
pub const ONE_HANDED_OPS: usize = 4;
/// Operations per two-handed block.
pub const TWO_HANDED_OPS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartKind {
    InspectSystem,
    InitialState,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValveOp {
    pub valve: NodeId,
    pub target_state: ValveState,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Block {
    Manipulation { id: String, kind: Handedness, ops: Vec<ValveOp> },
    NoManipulation { id: String, prompt: String },
}

impl Block {
    pub fn id(&self) -> &str {
        match self {
            Block::Manipulation { id, .. } | Block::NoManipulation { id, .. } => id,
        }
    }

    pub fn kind(&self) -> BlockKind {
        match self {
            Block::Manipulation { kind, .. } => (*kind).into(),
            Block::NoManipulation { .. } => BlockKind::NoManipulation,
        }
    }

    pub fn ops(&self) -> &[ValveOp] {
        match self {
            Block::Manipulation { ops, .. } => ops,
            Block::NoManipulation { .. } => &[],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Part {
    pub kind: PartKind,
    pub blocks: Vec<Block>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InspectionPlan {
    pub parts: Vec<Part>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("the valve registry is empty")]
    EmptyRegistry,
    #[error("plan references valve {0}, which is not in the registry")]
    MissingValve(NodeId),
    #[error("block {block}: valve {valve} is {actual:?} but the block is {expected:?}")]
    HandednessMismatch { block: String, valve: NodeId, expected: Handedness, actual: Handedness },
    #[error("block {block} has {got} operations, expected {expected}")]
    WrongOpCount { block: String, expected: usize, got: usize },
    #[error("plan must have parts [inspect_system, initial_state]")]
    WrongParts,
    #[error("part {0:?} lacks a one-handed, two-handed or no-manipulation block")]
    MissingBlockKind(PartKind),
    #[error("duplicate block id {0}")]
    DuplicateBlock(String),
}

/// Valve name → handedness, as declared by the plant descriptor.
pub type ValveRegistry = BTreeMap<NodeId, Handedness>;

pub fn registry(model: &SceneModel) -> ValveRegistry {
    model.valves().filter_map(|n| n.handedness.map(|h| (n.id.clone(), h))).collect()
}

impl InspectionPlan {
    pub fn blocks(&self) -> impl Iterator<Item = &Block> {
        self.parts.iter().flat_map(|p| p.blocks.iter())
    }

    pub fn validate(&self, registry: &ValveRegistry) -> Result<(), PlanError> {
        if registry.is_empty() {
            return Err(PlanError::EmptyRegistry);
        }
        let kinds: Vec<PartKind> = self.parts.iter().map(|p| p.kind).collect();
        if kinds != [PartKind::InspectSystem, PartKind::InitialState] {
            return Err(PlanError::WrongParts);
        }
        let mut seen = alloc::collections::BTreeSet::new();
        for part in &self.parts {
            for want in [BlockKind::OneHanded, BlockKind::TwoHanded, BlockKind::NoManipulation] {
                if !part.blocks.iter().any(|b| b.kind() == want) {
                    return Err(PlanError::MissingBlockKind(part.kind));
                }
            }
            for block in &part.blocks {
                if !seen.insert(block.id()) {
                    return Err(PlanError::DuplicateBlock(block.id().into()));
                }
                if let Block::Manipulation { id, kind, ops } = block {
                    let expected = match kind {
                        Handedness::OneHanded => ONE_HANDED_OPS,
                        Handedness::TwoHanded => TWO_HANDED_OPS,
                    };
                    if ops.len() != expected {
                        return Err(PlanError::WrongOpCount { block: id.clone(), expected, got: ops.len() });
                    }
                    for op in ops {
                        let actual = *registry.get(&op.valve).ok_or_else(|| PlanError::MissingValve(op.valve.clone()))?;
                        if actual != *kind {
                            return Err(PlanError::HandednessMismatch {
                                block: id.clone(),
                                valve: op.valve.clone(),
                                expected: *kind,
                                actual,
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Valve states after performing every operation in order.
    pub fn final_states(&self, initial: &BTreeMap<NodeId, ValveState>) -> BTreeMap<NodeId, ValveState> {
        let mut states = initial.clone();
        for op in self.blocks().flat_map(|b| b.ops()) {
            states.insert(op.valve.clone(), op.target_state);
        }
        states
    }
}

fn op(valve: &str, state: ValveState) -> ValveOp {
    ValveOp { valve: NodeId::new(valve).expect("static id"), target_state: state }
}

/// Default script over the default plant: part 1 switches the cold circuit
/// to counter-flow and the hot circuit to the plate exchanger; part 2
/// undoes both. With a shuffle seed, the order of part 2's one-handed
/// operations is permuted.
pub fn build_default_plan(registry: &ValveRegistry, shuffle_seed: Option<u64>) -> Result<InspectionPlan, PlanError> {
    use ValveState::{Closed, Open};
    if registry.is_empty() {
        return Err(PlanError::EmptyRegistry);
    }
    let mut restore_1h = alloc::vec![op("2V3", Closed), op("2V4", Closed), op("2V1", Open), op("2V2", Open)];
    if let Some(seed) = shuffle_seed {
        restore_1h.shuffle(&mut rng::stream(seed, b"plan-shuffle"));
    }
    let plan = InspectionPlan {
        parts: alloc::vec![
            Part {
                kind: PartKind::InspectSystem,
                blocks: alloc::vec![
                    Block::NoManipulation {
                        id: "P1-NM".into(),
                        prompt: "Describe the pipes leaving the plate exchanger.".into(),
                    },
                    Block::Manipulation {
                        id: "P1-1H".into(),
                        kind: Handedness::OneHanded,
                        ops: alloc::vec![op("2V1", Closed), op("2V2", Closed), op("2V3", Open), op("2V4", Open)],
                    },
                    Block::Manipulation {
                        id: "P1-2H".into(),
                        kind: Handedness::TwoHanded,
                        ops: alloc::vec![op("1V1", Closed), op("1V2", Open)],
                    },
                ],
            },
            Part {
                kind: PartKind::InitialState,
                blocks: alloc::vec![
                    Block::Manipulation { id: "P2-1H".into(), kind: Handedness::OneHanded, ops: restore_1h },
                    Block::Manipulation {
                        id: "P2-2H".into(),
                        kind: Handedness::TwoHanded,
                        ops: alloc::vec![op("1V2", Closed), op("1V1", Open)],
                    },
                    Block::NoManipulation {
                        id: "P2-NM".into(),
                        prompt: "Read the temperature gauge on the hot outlet.".into(),
                    },
                ],
            },
        ],
    };
    plan.validate(registry)?;
    Ok(plan)
}

//! The shared scene model: a versioned node graph of the installation
//! (valves, exchanger units, pipes, labels) with visual state and
//! annotations, plus the atomic edits that change it.
//!
//! Every operation is a pure function from one snapshot to the next. Besides
//! the visible fields the model keeps a provenance stamp per editable field
//! (version and author role of the last write); merge rules read it, field
//! equality ignores it.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Pose, Vec3};
use crate::replica::Role;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct NodeId(String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Result<Self, SceneError> {
        let id = id.into();
        if id.is_empty() {
            return Err(SceneError::EmptyId);
        }
        Ok(NodeId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for NodeId {
    type Error = SceneError;
    fn try_from(s: String) -> Result<Self, SceneError> {
        NodeId::new(s)
    }
}

impl From<NodeId> for String {
    fn from(id: NodeId) -> String {
        id.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Valve,
    ExchangerUnit,
    Pipe,
    Label,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValveState {
    Open,
    Closed,
}

impl ValveState {
    pub fn toggled(self) -> ValveState {
        match self {
            ValveState::Open => ValveState::Closed,
            ValveState::Closed => ValveState::Open,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Handedness {
    OneHanded,
    TwoHanded,
}

/// RGB color with components in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct Rgb([f64; 3]);

impl Rgb {
    pub const YELLOW: Rgb = Rgb([1.0, 1.0, 0.0]);
    pub const RED: Rgb = Rgb([1.0, 0.0, 0.0]);

    pub fn new(r: f64, g: f64, b: f64) -> Result<Self, SceneError> {
        for c in [r, g, b] {
            if !(0.0..=1.0).contains(&c) {
                return Err(SceneError::ColorOutOfRange);
            }
        }
        Ok(Rgb([r, g, b]))
    }

    pub fn components(self) -> [f64; 3] {
        self.0
    }
}

impl TryFrom<[f64; 3]> for Rgb {
    type Error = SceneError;
    fn try_from(c: [f64; 3]) -> Result<Self, SceneError> {
        Rgb::new(c[0], c[1], c[2])
    }
}

impl From<Rgb> for [f64; 3] {
    fn from(c: Rgb) -> Self {
        c.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VisualState {
    pub highlight_color: Option<Rgb>,
    /// Valve-motion indication is playing.
    pub indication_animation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneNode {
    pub id: NodeId,
    pub kind: NodeKind,
    pub parent: Option<NodeId>,
    pub local_pose: Pose,
    pub valve_state: Option<ValveState>,
    pub handedness: Option<Handedness>,
    pub visual: VisualState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub id: String,
    pub author_role: Role,
    pub anchor: NodeId,
    pub text: String,
    /// Offset from the anchor node, meters.
    pub offset: Vec3,
}

/// Editable per-node fields; the unit of conflict detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Pose,
    ValveState,
    Highlight,
    Indication,
}

/// Version and author role of the last write to a field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stamp {
    pub version: u64,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NodeProvenance {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pose: Option<Stamp>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valve_state: Option<Stamp>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub highlight: Option<Stamp>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub indication: Option<Stamp>,
}

impl NodeProvenance {
    fn slot(&mut self, field: Field) -> &mut Option<Stamp> {
        match field {
            Field::Pose => &mut self.pose,
            Field::ValveState => &mut self.valve_state,
            Field::Highlight => &mut self.highlight,
            Field::Indication => &mut self.indication,
        }
    }

    pub fn get(&self, field: Field) -> Option<Stamp> {
        match field {
            Field::Pose => self.pose,
            Field::ValveState => self.valve_state,
            Field::Highlight => self.highlight,
            Field::Indication => self.indication,
        }
    }
}

/// One atomic change. Compound gestures are sequences of these.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum EditOp {
    SetPose { node: NodeId, pose: Pose },
    SetValveState { node: NodeId, state: ValveState },
    SetHighlight { node: NodeId, color: Option<Rgb> },
    SetIndication { node: NodeId, on: bool },
    AddAnnotation { annotation: Annotation },
    RemoveAnnotation { id: String },
}

impl EditOp {
    /// Node field written by this op, if it is a node-field edit.
    pub fn field(&self) -> Option<(&NodeId, Field)> {
        match self {
            EditOp::SetPose { node, .. } => Some((node, Field::Pose)),
            EditOp::SetValveState { node, .. } => Some((node, Field::ValveState)),
            EditOp::SetHighlight { node, .. } => Some((node, Field::Highlight)),
            EditOp::SetIndication { node, .. } => Some((node, Field::Indication)),
            EditOp::AddAnnotation { .. } | EditOp::RemoveAnnotation { .. } => None,
        }
    }
}

/// An [`EditOp`] with its author.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edit {
    pub author_role: Role,
    /// Per-author sequence number, assigned by the authoring replica.
    pub author_seq: u64,
    #[serde(flatten)]
    pub op: EditOp,
}

impl Edit {
    pub fn new(author_role: Role, author_seq: u64, op: EditOp) -> Self {
        Edit { author_role, author_seq, op }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SceneError {
    #[error("node id must not be empty")]
    EmptyId,
    #[error("duplicate node id {0}")]
    DuplicateId(String),
    #[error("node {node} references missing parent {parent}")]
    DanglingParent { node: String, parent: String },
    #[error("parent chain of node {0} contains a cycle")]
    ParentCycle(String),
    #[error("valve {0} is missing handedness")]
    ValveMissingHandedness(String),
    #[error("valve {0} is missing valve_state")]
    ValveMissingState(String),
    #[error("node {0} is not a valve but carries valve_state or handedness")]
    ValveFieldsOnNonValve(String),
    #[error("color component outside [0, 1]")]
    ColorOutOfRange,
    #[error("models have different node universes or fixed structure")]
    IncompatibleModels,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ApplyError {
    #[error("edit {seq} by {role:?}: unknown node {node}")]
    UnknownNode { node: NodeId, role: Role, seq: u64 },
    #[error("edit {seq} by {role:?}: node {node} is not a valve")]
    NotAValve { node: NodeId, role: Role, seq: u64 },
    #[error("edit {seq} by {role:?}: unknown annotation {id}")]
    UnknownAnnotation { id: String, role: Role, seq: u64 },
    #[error("edit {seq} by {role:?}: annotation {id} already exists")]
    DuplicateAnnotation { id: String, role: Role, seq: u64 },
    #[error("edit {seq} by {role:?}: annotation anchor {anchor} does not resolve")]
    DanglingAnchor { anchor: NodeId, role: Role, seq: u64 },
}

/// Node entry of a model descriptor document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeDescriptor {
    pub id: String,
    pub kind: NodeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
    pub pose: Pose,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valve_state: Option<ValveState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub handedness: Option<Handedness>,
}

/// Model descriptor document: `{ "marker_offset": pose, "nodes": [...] }`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ModelDescriptor {
    #[serde(default)]
    pub marker_offset: Pose,
    #[serde(default)]
    pub nodes: Vec<NodeDescriptor>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneModel {
    pub nodes: BTreeMap<NodeId, SceneNode>,
    /// Keyed by annotation id.
    pub annotations: BTreeMap<String, Annotation>,
    pub version: u64,
    pub world_anchor: Pose,
    /// Marker-to-model offset declared by the descriptor.
    pub marker_offset: Pose,
    #[serde(default)]
    pub provenance: BTreeMap<NodeId, NodeProvenance>,
}

impl SceneModel {
    /// Builds a version-0 model from a descriptor, checking every structural
    /// invariant.
    pub fn load(descriptor: &ModelDescriptor) -> Result<SceneModel, SceneError> {
        let mut nodes = BTreeMap::new();
        for nd in &descriptor.nodes {
            let id = NodeId::new(nd.id.clone())?;
            let is_valve = nd.kind == NodeKind::Valve;
            if is_valve {
                if nd.handedness.is_none() {
                    return Err(SceneError::ValveMissingHandedness(nd.id.clone()));
                }
                if nd.valve_state.is_none() {
                    return Err(SceneError::ValveMissingState(nd.id.clone()));
                }
            } else if nd.handedness.is_some() || nd.valve_state.is_some() {
                return Err(SceneError::ValveFieldsOnNonValve(nd.id.clone()));
            }
            let parent = nd.parent.clone().map(NodeId::new).transpose()?;
            let node = SceneNode {
                id: id.clone(),
                kind: nd.kind,
                parent,
                local_pose: nd.pose,
                valve_state: nd.valve_state,
                handedness: nd.handedness,
                visual: VisualState::default(),
            };
            if nodes.insert(id, node).is_some() {
                return Err(SceneError::DuplicateId(nd.id.clone()));
            }
        }
        for node in nodes.values() {
            if let Some(parent) = &node.parent {
                if !nodes.contains_key(parent) {
                    return Err(SceneError::DanglingParent {
                        node: node.id.to_string(),
                        parent: parent.to_string(),
                    });
                }
            }
        }
        for node in nodes.values() {
            let mut seen = BTreeSet::new();
            let mut cursor = Some(&node.id);
            while let Some(id) = cursor {
                if !seen.insert(id) {
                    return Err(SceneError::ParentCycle(node.id.to_string()));
                }
                cursor = nodes[id].parent.as_ref();
            }
        }
        Ok(SceneModel {
            nodes,
            annotations: BTreeMap::new(),
            version: 0,
            world_anchor: descriptor.marker_offset,
            marker_offset: descriptor.marker_offset,
            provenance: BTreeMap::new(),
        })
    }

    /// Places the model relative to a detected marker. Node local poses are
    /// untouched; only the world anchor moves.
    pub fn anchored(&self, marker: &Pose) -> SceneModel {
        let mut out = self.clone();
        out.world_anchor = marker.compose(&self.marker_offset);
        out
    }

    /// Pose of a node in the model frame (parent chain composed).
    pub fn model_pose(&self, id: &NodeId) -> Option<Pose> {
        let mut node = self.nodes.get(id)?;
        let mut pose = node.local_pose;
        while let Some(parent) = &node.parent {
            node = &self.nodes[parent];
            pose = node.local_pose.compose(&pose);
        }
        Some(pose)
    }

    /// Pose of a node in the world frame.
    pub fn world_pose(&self, id: &NodeId) -> Option<Pose> {
        self.model_pose(id).map(|p| self.world_anchor.compose(&p))
    }

    pub fn valves(&self) -> impl Iterator<Item = &SceneNode> {
        self.nodes.values().filter(|n| n.kind == NodeKind::Valve)
    }

    pub fn stamp(&self, node: &NodeId, field: Field) -> Option<Stamp> {
        self.provenance.get(node).and_then(|p| p.get(field))
    }

    /// Returns the model with `edit` applied and the version incremented.
    pub fn apply_edit(&self, edit: &Edit) -> Result<SceneModel, ApplyError> {
        let mut out = self.clone();
        let version = self.version + 1;
        out.apply_in_place(edit, version)?;
        out.version = version;
        Ok(out)
    }

    /// Folds [`apply_edit`](Self::apply_edit) over `edits`.
    pub fn apply_all<'a>(
        &self,
        edits: impl IntoIterator<Item = &'a Edit>,
    ) -> Result<SceneModel, ApplyError> {
        let mut out = self.clone();
        for edit in edits {
            let version = out.version + 1;
            out.apply_in_place(edit, version)?;
            out.version = version;
        }
        Ok(out)
    }

    /// Checks that `edit` can be applied, without applying it.
    pub fn validate(&self, edit: &Edit) -> Result<(), ApplyError> {
        let role = edit.author_role;
        let seq = edit.author_seq;
        let node_exists = |node: &NodeId| -> Result<&SceneNode, ApplyError> {
            self.nodes.get(node).ok_or_else(|| ApplyError::UnknownNode { node: node.clone(), role, seq })
        };
        match &edit.op {
            EditOp::SetPose { node, .. }
            | EditOp::SetHighlight { node, .. }
            | EditOp::SetIndication { node, .. } => node_exists(node).map(|_| ()),
            EditOp::SetValveState { node, .. } => {
                let n = node_exists(node)?;
                if n.kind != NodeKind::Valve {
                    return Err(ApplyError::NotAValve { node: node.clone(), role, seq });
                }
                Ok(())
            }
            EditOp::AddAnnotation { annotation } => {
                if self.annotations.contains_key(&annotation.id) {
                    return Err(ApplyError::DuplicateAnnotation { id: annotation.id.clone(), role, seq });
                }
                if !self.nodes.contains_key(&annotation.anchor) {
                    return Err(ApplyError::DanglingAnchor { anchor: annotation.anchor.clone(), role, seq });
                }
                Ok(())
            }
            EditOp::RemoveAnnotation { id } => {
                if !self.annotations.contains_key(id) {
                    return Err(ApplyError::UnknownAnnotation { id: id.clone(), role, seq });
                }
                Ok(())
            }
        }
    }

    /// Applies `edit` stamping the written field with `stamp_version`. Leaves
    /// `self` untouched on error. Does not change `self.version`.
    pub(crate) fn apply_in_place(&mut self, edit: &Edit, stamp_version: u64) -> Result<(), ApplyError> {
        self.validate(edit)?;
        let stamp = Stamp { version: stamp_version, role: edit.author_role };
        match &edit.op {
            EditOp::SetPose { node, pose } => {
                self.node_mut(node).local_pose = *pose;
            }
            EditOp::SetValveState { node, state } => {
                self.node_mut(node).valve_state = Some(*state);
            }
            EditOp::SetHighlight { node, color } => {
                self.node_mut(node).visual.highlight_color = *color;
            }
            EditOp::SetIndication { node, on } => {
                self.node_mut(node).visual.indication_animation = *on;
            }
            EditOp::AddAnnotation { annotation } => {
                self.annotations.insert(annotation.id.clone(), annotation.clone());
            }
            EditOp::RemoveAnnotation { id } => {
                self.annotations.remove(id);
            }
        }
        if let Some((node, field)) = edit.op.field() {
            *self.provenance.entry(node.clone()).or_default().slot(field) = Some(stamp);
        }
        Ok(())
    }

    fn node_mut(&mut self, id: &NodeId) -> &mut SceneNode {
        self.nodes.get_mut(id).expect("validated")
    }

    /// Equality of every visible field, ignoring version and provenance.
    pub fn fields_eq(&self, other: &SceneModel) -> bool {
        self.nodes == other.nodes
            && self.annotations == other.annotations
            && self.world_anchor == other.world_anchor
            && self.marker_offset == other.marker_offset
    }

    fn same_structure(&self, other: &SceneModel) -> bool {
        self.world_anchor == other.world_anchor
            && self.marker_offset == other.marker_offset
            && self.nodes.len() == other.nodes.len()
            && self.nodes.iter().zip(other.nodes.iter()).all(|((ia, a), (ib, b))| {
                ia == ib
                    && a.kind == b.kind
                    && a.parent == b.parent
                    && a.handedness == b.handedness
                    && a.valve_state.is_some() == b.valve_state.is_some()
            })
    }
}

/// Edits that turn `a` into a model field-equal to `b`. Removals come before
/// additions so replaced annotations do not collide on id.
pub fn diff(a: &SceneModel, b: &SceneModel, author: Role) -> Result<Vec<Edit>, SceneError> {
    if !a.same_structure(b) {
        return Err(SceneError::IncompatibleModels);
    }
    let mut ops = Vec::new();
    for (id, na) in &a.nodes {
        let nb = &b.nodes[id];
        if na.local_pose != nb.local_pose {
            ops.push(EditOp::SetPose { node: id.clone(), pose: nb.local_pose });
        }
        if na.valve_state != nb.valve_state {
            if let Some(state) = nb.valve_state {
                ops.push(EditOp::SetValveState { node: id.clone(), state });
            }
        }
        if na.visual.highlight_color != nb.visual.highlight_color {
            ops.push(EditOp::SetHighlight { node: id.clone(), color: nb.visual.highlight_color });
        }
        if na.visual.indication_animation != nb.visual.indication_animation {
            ops.push(EditOp::SetIndication { node: id.clone(), on: nb.visual.indication_animation });
        }
    }
    for (id, ann) in &a.annotations {
        if b.annotations.get(id) != Some(ann) {
            ops.push(EditOp::RemoveAnnotation { id: id.clone() });
        }
    }
    for (id, ann) in &b.annotations {
        if a.annotations.get(id) != Some(ann) {
            ops.push(EditOp::AddAnnotation { annotation: ann.clone() });
        }
    }
    Ok(ops
        .into_iter()
        .enumerate()
        .map(|(i, op)| Edit::new(author, i as u64, op))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::defaults;
    use crate::geometry::Quat;
    use alloc::vec;

    fn nid(s: &str) -> NodeId {
        NodeId::new(s).unwrap()
    }

    fn plant() -> SceneModel {
        SceneModel::load(&defaults::plant_descriptor()).unwrap()
    }

    fn valve(id: &str, state: ValveState) -> NodeDescriptor {
        NodeDescriptor {
            id: id.into(),
            kind: NodeKind::Valve,
            parent: None,
            pose: Pose::IDENTITY,
            valve_state: Some(state),
            handedness: Some(Handedness::OneHanded),
        }
    }

    #[test]
    fn default_plant_has_fourteen_valves_and_two_exchangers() {
        let m = plant();
        assert_eq!(m.valves().count(), 14);
        let exchangers = m.nodes.values().filter(|n| n.kind == NodeKind::ExchangerUnit).count();
        assert_eq!(exchangers, 2);
        assert_eq!(m.version, 0);
    }

    #[test]
    fn empty_descriptor_gives_empty_model() {
        let m = SceneModel::load(&ModelDescriptor::default()).unwrap();
        assert!(m.nodes.is_empty());
        assert_eq!(m.version, 0);
    }

    #[test]
    fn duplicate_id_is_rejected() {
        let d = ModelDescriptor {
            marker_offset: Pose::IDENTITY,
            nodes: vec![valve("2V4", ValveState::Open), valve("2V4", ValveState::Closed)],
        };
        assert_eq!(SceneModel::load(&d), Err(SceneError::DuplicateId("2V4".into())));
    }

    #[test]
    fn structural_errors() {
        let mut v = valve("1V1", ValveState::Open);
        v.handedness = None;
        let d = ModelDescriptor { marker_offset: Pose::IDENTITY, nodes: vec![v] };
        assert!(matches!(SceneModel::load(&d), Err(SceneError::ValveMissingHandedness(_))));

        let mut v = valve("1V1", ValveState::Open);
        v.parent = Some("nowhere".into());
        let d = ModelDescriptor { marker_offset: Pose::IDENTITY, nodes: vec![v] };
        assert!(matches!(SceneModel::load(&d), Err(SceneError::DanglingParent { .. })));

        let mut a = valve("a", ValveState::Open);
        a.parent = Some("b".into());
        let mut b = valve("b", ValveState::Open);
        b.parent = Some("a".into());
        let d = ModelDescriptor { marker_offset: Pose::IDENTITY, nodes: vec![a, b] };
        assert!(matches!(SceneModel::load(&d), Err(SceneError::ParentCycle(_))));

        let pipe = NodeDescriptor {
            id: "P1".into(),
            kind: NodeKind::Pipe,
            parent: None,
            pose: Pose::IDENTITY,
            valve_state: Some(ValveState::Open),
            handedness: None,
        };
        let d = ModelDescriptor { marker_offset: Pose::IDENTITY, nodes: vec![pipe] };
        assert!(matches!(SceneModel::load(&d), Err(SceneError::ValveFieldsOnNonValve(_))));
    }

    #[test]
    fn anchoring_with_identity_and_translation() {
        let m = SceneModel::load(&ModelDescriptor::default()).unwrap();
        assert_eq!(m.anchored(&Pose::IDENTITY).world_anchor, Pose::IDENTITY);
        let moved = m.anchored(&Pose::at(Vec3::new(1.0, 0.0, 0.0)));
        assert_eq!(moved.world_anchor.position, Vec3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn anchoring_keeps_local_poses() {
        let m = plant();
        let marker = Pose::new(Vec3::new(2.0, 0.0, -1.0), Quat::from_yaw(0.3));
        let a = m.anchored(&marker);
        assert_eq!(a.nodes, m.nodes);
        assert_eq!(a.version, m.version);
    }

    #[test]
    fn set_valve_state_bumps_version() {
        let m = plant();
        let id = nid("2V4");
        assert_eq!(m.nodes[&id].valve_state, Some(ValveState::Closed));
        let e = Edit::new(Role::Expert, 0, EditOp::SetValveState { node: id.clone(), state: ValveState::Open });
        let out = m.apply_edit(&e).unwrap();
        assert_eq!(out.nodes[&id].valve_state, Some(ValveState::Open));
        assert_eq!(out.version, m.version + 1);
        assert_eq!(out.stamp(&id, Field::ValveState), Some(Stamp { version: 1, role: Role::Expert }));
    }

    #[test]
    fn add_then_remove_annotation_restores_set() {
        let m = plant();
        let ann = Annotation {
            id: "A1".into(),
            author_role: Role::Operator,
            anchor: nid("2V4"),
            text: "stiff handle".into(),
            offset: Vec3::new(0.0, 0.1, 0.0),
        };
        let add = Edit::new(Role::Operator, 0, EditOp::AddAnnotation { annotation: ann });
        let rm = Edit::new(Role::Operator, 1, EditOp::RemoveAnnotation { id: "A1".into() });
        let out = m.apply_all([&add, &rm]).unwrap();
        assert_eq!(out.annotations, m.annotations);
        assert_eq!(out.version, 2);
    }

    #[test]
    fn unknown_targets_are_reported() {
        let m = plant();
        let e = Edit::new(Role::Operator, 3, EditOp::SetIndication { node: nid("XX"), on: true });
        assert!(matches!(m.apply_edit(&e), Err(ApplyError::UnknownNode { seq: 3, .. })));
        let e = Edit::new(Role::Operator, 4, EditOp::RemoveAnnotation { id: "nope".into() });
        assert!(matches!(m.apply_edit(&e), Err(ApplyError::UnknownAnnotation { .. })));
        let e = Edit::new(Role::Operator, 5, EditOp::SetValveState { node: nid("HX-PLATE"), state: ValveState::Open });
        assert!(matches!(m.apply_edit(&e), Err(ApplyError::NotAValve { .. })));
    }

    #[test]
    fn diff_of_equal_models_is_empty() {
        let m = plant();
        assert!(diff(&m, &m, Role::Expert).unwrap().is_empty());
    }

    #[test]
    fn diff_of_one_toggle_is_one_edit() {
        let a = plant();
        let e = Edit::new(Role::Expert, 0, EditOp::SetValveState { node: nid("1V3"), state: ValveState::Open });
        let b = a.apply_edit(&e).unwrap();
        let d = diff(&a, &b, Role::Expert).unwrap();
        assert_eq!(d.len(), 1);
        assert!(matches!(d[0].op, EditOp::SetValveState { .. }));
    }

    #[test]
    fn diff_rejects_different_universes() {
        let a = plant();
        let b = SceneModel::load(&ModelDescriptor::default()).unwrap();
        assert_eq!(diff(&a, &b, Role::Expert), Err(SceneError::IncompatibleModels));
    }
}

//! Drivers for the Expert-precedence and annotation-retention properties.

use rand::Rng;
use replisync_core::replica::{create_replica, synchronize, RejectReason, SyncRequest};
use replisync_core::rng::{self, SimRng};
use replisync_core::scene::{Edit, EditOp, SceneModel, SceneNode};
use replisync_core::{ClientId, Role};

use super::{plant, random_color, random_field_op, random_op, random_pose};

pub fn request(role: Role, base: u64, ops: Vec<EditOp>) -> SyncRequest {
    let owner = ClientId::new(match role {
        Role::Expert => "expert",
        Role::Operator => "operator",
    })
    .unwrap();
    let edits = ops.into_iter().enumerate().map(|(i, op)| Edit::new(role, i as u64, op)).collect();
    SyncRequest { owner, owner_role: role, base_version: base, edits }
}

/// Another value for the same node field as `op`.
fn rival(op: &EditOp, r: &mut SimRng) -> EditOp {
    match op {
        EditOp::SetPose { node, .. } => EditOp::SetPose { node: node.clone(), pose: random_pose(r) },
        EditOp::SetValveState { node, state } => EditOp::SetValveState { node: node.clone(), state: state.toggled() },
        EditOp::SetHighlight { node, .. } => EditOp::SetHighlight { node: node.clone(), color: random_color(r) },
        EditOp::SetIndication { node, on } => EditOp::SetIndication { node: node.clone(), on: !on },
        _ => unreachable!("field edits only"),
    }
}

/// The node field `op` writes, rendered for comparison.
fn field_of(model: &SceneModel, op: &EditOp) -> String {
    let (node, _) = op.field().expect("field edit");
    let n: &SceneNode = &model.nodes[node];
    match op {
        EditOp::SetPose { .. } => format!("{:?}", n.local_pose),
        EditOp::SetValveState { .. } => format!("{:?}", n.valve_state),
        EditOp::SetHighlight { .. } => format!("{:?}", n.visual.highlight_color),
        EditOp::SetIndication { .. } => format!("{:?}", n.visual.indication_animation),
        _ => unreachable!(),
    }
}

pub fn with_history(r: &mut SimRng) -> SceneModel {
    let mut shared = plant();
    for _ in 0..r.random_range(0..4) {
        let role = if r.random_bool(0.5) { Role::Expert } else { Role::Operator };
        let op = random_op(r, &shared, role, "h");
        shared = synchronize(&request(role, shared.version, vec![op]), &shared).unwrap().merged;
    }
    shared
}

/// Single-field conflicts between an Expert and an Operator request, in
/// random order and with stale or fresh bases. Returns the number of cases
/// where the merged value is not the Expert's.
pub fn precedence_violations(seed: u64, cases: u64) -> u64 {
    let mut r = rng::stream(seed, b"precedence");
    let mut violations = 0;
    for _ in 0..cases {
        let shared = with_history(&mut r);
        let expert_op = random_field_op(&mut r, &shared);
        let operator_op = rival(&expert_op, &mut r);
        let expected = field_of(&shared.apply_edit(&Edit::new(Role::Expert, 0, expert_op.clone())).unwrap(), &expert_op);
        let base = shared.version;
        // A second request may be based on the original snapshot or on the
        // first commit.
        let late_base = |s: &SceneModel, r: &mut SimRng| if r.random_bool(0.5) { base } else { s.version };
        let merged = if r.random_bool(0.5) {
            let s1 = synchronize(&request(Role::Expert, base, vec![expert_op.clone()]), &shared).unwrap().merged;
            let b = late_base(&s1, &mut r);
            let out = synchronize(&request(Role::Operator, b, vec![operator_op]), &s1).unwrap();
            if out.rejected.len() != 1 || out.rejected[0].reason != RejectReason::ExpertPrecedence {
                violations += 1;
            }
            out.merged
        } else {
            let s1 = synchronize(&request(Role::Operator, base, vec![operator_op]), &shared).unwrap().merged;
            let b = late_base(&s1, &mut r);
            synchronize(&request(Role::Expert, b, vec![expert_op.clone()]), &s1).unwrap().merged
        };
        if field_of(&merged, &expert_op) != expected {
            violations += 1;
        }
    }
    violations
}

/// Random syncs that are not Expert removals against models carrying
/// annotations. Returns (annotations checked, annotations lost).
pub fn retention_violations(seed: u64, cases: u64) -> (u64, u64) {
    let mut r = rng::stream(seed, b"retention");
    let (mut checked, mut lost) = (0, 0);
    for _ in 0..cases {
        let mut shared = with_history(&mut r);
        for _ in 0..r.random_range(1..4) {
            let role = if r.random_bool(0.5) { Role::Expert } else { Role::Operator };
            let op = random_op(&mut r, &shared, role, "seed");
            shared = synchronize(&request(role, shared.version, vec![op]), &shared).unwrap().merged;
        }
        let before: Vec<String> = shared.annotations.keys().cloned().collect();
        let role = if r.random_bool(0.5) { Role::Expert } else { Role::Operator };
        let replica = create_replica(&shared, ClientId::new("c").unwrap(), role, 0.2).unwrap();
        let mut working = replica.working.clone();
        let mut ops = Vec::new();
        for _ in 0..r.random_range(0..6) {
            let op = random_op(&mut r, &working, role, "seed");
            if role == Role::Expert && matches!(op, EditOp::RemoveAnnotation { .. }) {
                continue;
            }
            working = working.apply_edit(&Edit::new(role, ops.len() as u64, op.clone())).unwrap();
            ops.push(op);
        }
        let merged = synchronize(&request(role, shared.version, ops), &shared).unwrap().merged;
        for id in &before {
            checked += 1;
            if !merged.annotations.contains_key(id) {
                lost += 1;
            }
        }
    }
    (checked, lost)
}


//! Helpers shared by the integration tests: the default plant and seeded
//! generators of valid edits.
#![allow(dead_code)]

pub mod convergence;
pub mod merge;
pub mod oracles;

use rand::Rng;
use replisync_core::defaults;
use replisync_core::geometry::{Pose, Quat, Vec3};
use replisync_core::scene::{Annotation, EditOp, NodeId, Rgb, SceneModel, ValveState};
use replisync_core::Role;

pub fn plant() -> SceneModel {
    SceneModel::load(&defaults::plant_descriptor()).unwrap()
}

pub fn nid(s: &str) -> NodeId {
    NodeId::new(s).unwrap()
}

pub fn random_pose<R: Rng>(rng: &mut R) -> Pose {
    let axis = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(0.1..1.0));
    let q = Quat::from_axis_angle(axis, rng.random_range(-3.0..3.0)).unwrap();
    let p = Vec3::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
    Pose::new(p, q)
}

pub fn random_color<R: Rng>(rng: &mut R) -> Option<Rgb> {
    match rng.random_range(0..3) {
        0 => None,
        1 => Some(Rgb::YELLOW),
        _ => Some(Rgb::new(rng.random(), rng.random(), rng.random()).unwrap()),
    }
}

/// A node-field edit on a random node of `model`, valid by construction.
pub fn random_field_op<R: Rng>(rng: &mut R, model: &SceneModel) -> EditOp {
    let valves: Vec<&NodeId> = model.valves().map(|v| &v.id).collect();
    let nodes: Vec<&NodeId> = model.nodes.keys().collect();
    match rng.random_range(0..4) {
        0 => EditOp::SetPose { node: nodes[rng.random_range(0..nodes.len())].clone(), pose: random_pose(rng) },
        1 => {
            let state = if rng.random_bool(0.5) { ValveState::Open } else { ValveState::Closed };
            EditOp::SetValveState { node: valves[rng.random_range(0..valves.len())].clone(), state }
        }
        2 => EditOp::SetHighlight { node: nodes[rng.random_range(0..nodes.len())].clone(), color: random_color(rng) },
        _ => EditOp::SetIndication { node: nodes[rng.random_range(0..nodes.len())].clone(), on: rng.random_bool(0.5) },
    }
}

/// Any edit valid against `model`. Annotation ids come from a small pool
/// per `tag`, so two authors sharing a tag collide at merge time.
pub fn random_op<R: Rng>(rng: &mut R, model: &SceneModel, role: Role, tag: &str) -> EditOp {
    let roll = rng.random_range(0..10);
    let id = format!("{tag}-{}", rng.random_range(0..6));
    if roll < 2 && !model.annotations.contains_key(&id) {
        let nodes: Vec<&NodeId> = model.nodes.keys().collect();
        EditOp::AddAnnotation {
            annotation: Annotation {
                id,
                author_role: role,
                anchor: nodes[rng.random_range(0..nodes.len())].clone(),
                text: format!("note {}", rng.random_range(0..100)),
                offset: Vec3::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5), 0.0),
            },
        }
    } else if roll < 3 && !model.annotations.is_empty() {
        let ids: Vec<&String> = model.annotations.keys().collect();
        EditOp::RemoveAnnotation { id: ids[rng.random_range(0..ids.len())].clone() }
    } else {
        random_field_op(rng, model)
    }
}

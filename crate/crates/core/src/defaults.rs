//! Shipped default configuration for the heat-exchanger bench: plant
//! descriptor, routing table and effectiveness table.
//!
//! Valve names are `1V1..1V7` (hot circuit) and `2V1..2V7` (cold circuit).
//! Routing uses four canonical configurations:
//!
//! | route              | hot side            | cold side                      |
//! |--------------------|---------------------|--------------------------------|
//! | shell + parallel   | 1V1 open, 1V2 closed | 2V1, 2V2 open; 2V3, 2V4 closed |
//! | shell + counter    | 1V1 open, 1V2 closed | 2V3, 2V4 open; 2V1, 2V2 closed |
//! | plate + parallel   | 1V2 open, 1V1 closed | 2V1, 2V2 open; 2V3, 2V4 closed |
//! | plate + counter    | 1V2 open, 1V1 closed | 2V3, 2V4 open; 2V1, 2V2 closed |
//!
//! The bench starts in shell + parallel.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::geometry::{Pose, Quat, Vec3};
use crate::scenario::plant::{
    EffectivenessEntry, EffectivenessTable, Exchanger, FlowMode, PlantConfig, RouteRow, RoutingTable,
};
use crate::scene::{Handedness, ModelDescriptor, NodeDescriptor, NodeId, NodeKind, ValveState};

pub const SHELL_UNIT: &str = "HX-SHELL";
pub const PLATE_UNIT: &str = "HX-PLATE";

const TWO_HANDED: [&str; 4] = ["1V1", "1V2", "2V5", "2V6"];
const INITIALLY_OPEN: [&str; 3] = ["1V1", "2V1", "2V2"];

pub fn valve_names() -> Vec<String> {
    (1..=2).flat_map(|c| (1..=7).map(move |i| format!("{c}V{i}"))).collect()
}

pub fn plant_descriptor() -> ModelDescriptor {
    let mut nodes = Vec::new();
    nodes.push(NodeDescriptor {
        id: SHELL_UNIT.into(),
        kind: NodeKind::ExchangerUnit,
        parent: None,
        pose: Pose::at(Vec3::new(-0.8, 1.0, 0.0)),
        valve_state: None,
        handedness: None,
    });
    nodes.push(NodeDescriptor {
        id: PLATE_UNIT.into(),
        kind: NodeKind::ExchangerUnit,
        parent: None,
        pose: Pose::new(Vec3::new(0.8, 1.0, 0.0), Quat::from_yaw(core::f64::consts::PI)),
        valve_state: None,
        handedness: None,
    });
    for (circuit, y) in [(1, 1.4), (2, 0.6)] {
        nodes.push(NodeDescriptor {
            id: format!("PIPE-{circuit}"),
            kind: NodeKind::Pipe,
            parent: None,
            pose: Pose::at(Vec3::new(0.0, y, 0.1)),
            valve_state: None,
            handedness: None,
        });
    }
    for name in valve_names() {
        let circuit = if name.starts_with('1') { 1.0 } else { 2.0 };
        let index: f64 = name[2..].parse::<u8>().map(f64::from).unwrap_or(0.0);
        let (parent, pose) = match name.as_str() {
            "1V1" | "2V5" => (Some(SHELL_UNIT.into()), Pose::at(Vec3::new(0.0, 0.6 - 0.3 * (circuit - 1.0), 0.3))),
            "1V2" | "2V6" => (Some(PLATE_UNIT.into()), Pose::at(Vec3::new(0.0, 0.6 - 0.3 * (circuit - 1.0), -0.3))),
            _ => (None, Pose::at(Vec3::new(-1.5 + 0.4 * index, 0.4 + 0.5 * circuit, 0.2))),
        };
        let handedness =
            if TWO_HANDED.contains(&name.as_str()) { Handedness::TwoHanded } else { Handedness::OneHanded };
        let state = if INITIALLY_OPEN.contains(&name.as_str()) { ValveState::Open } else { ValveState::Closed };
        nodes.push(NodeDescriptor {
            id: name,
            kind: NodeKind::Valve,
            parent,
            pose,
            valve_state: Some(state),
            handedness: Some(handedness),
        });
    }
    nodes.push(NodeDescriptor {
        id: "LBL-OUTLET".into(),
        kind: NodeKind::Label,
        parent: Some(PLATE_UNIT.into()),
        pose: Pose::at(Vec3::new(0.0, 0.5, 0.0)),
        valve_state: None,
        handedness: None,
    });
    ModelDescriptor { marker_offset: Pose::at(Vec3::new(0.0, 0.0, 0.5)), nodes }
}

fn predicate(pairs: &[(&str, ValveState)]) -> BTreeMap<NodeId, ValveState> {
    pairs
        .iter()
        .map(|(id, s)| (NodeId::new(*id).expect("static id"), *s))
        .collect()
}

pub fn routing_table() -> RoutingTable {
    use ValveState::{Closed, Open};
    let shell = [("1V1", Open), ("1V2", Closed)];
    let plate = [("1V1", Closed), ("1V2", Open)];
    let parallel = [("2V1", Open), ("2V2", Open), ("2V3", Closed), ("2V4", Closed)];
    let counter = [("2V1", Closed), ("2V2", Closed), ("2V3", Open), ("2V4", Open)];
    let mut rows = Vec::new();
    for (ex, hot, ex_name) in [(Exchanger::ShellAndTube, &shell, "shell"), (Exchanger::Plate, &plate, "plate")] {
        for (flow, cold, flow_name) in [(FlowMode::Parallel, &parallel, "parallel"), (FlowMode::Counter, &counter, "counter")] {
            let mut pairs: Vec<(&str, ValveState)> = hot.to_vec();
            pairs.extend_from_slice(cold);
            rows.push(RouteRow {
                name: format!("{ex_name}+{flow_name}"),
                exchanger: ex,
                flow,
                requires: predicate(&pairs),
            });
        }
    }
    RoutingTable { rows }
}

pub fn effectiveness_table() -> EffectivenessTable {
    let e = |exchanger, flow, effectiveness| EffectivenessEntry { exchanger, flow, effectiveness };
    EffectivenessTable {
        entries: alloc::vec![
            e(Exchanger::ShellAndTube, FlowMode::Parallel, 0.35),
            e(Exchanger::ShellAndTube, FlowMode::Counter, 0.55),
            e(Exchanger::Plate, FlowMode::Parallel, 0.45),
            e(Exchanger::Plate, FlowMode::Counter, 0.75),
        ],
    }
}

pub fn plant_config() -> PlantConfig {
    PlantConfig {
        routing: routing_table(),
        effectiveness: effectiveness_table(),
        hot_inlet_c: 65.0,
        cold_inlet_c: 12.0,
    }
}

//! Heat-exchanger plant: valve configuration → active route → hot outlet
//! temperature.
//!
//! The valve-to-circuit topology is configuration. A routing table lists rows
//! of valve-state predicates; the first row whose predicate holds gives the
//! route. Valves a row does not mention are outside its path.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scene::{NodeId, SceneModel, ValveState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exchanger {
    ShellAndTube,
    Plate,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowMode {
    Parallel,
    Counter,
    Undefined,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlantError {
    #[error("effectiveness {value} for {exchanger:?}/{flow:?} is outside [0, 1)")]
    EffectivenessOutOfRange { exchanger: Exchanger, flow: FlowMode, value: f64 },
    #[error("routing row {row} references valve {valve} missing from the plant")]
    UnknownValve { row: String, valve: String },
    #[error("inlet temperatures must be finite with hot >= cold")]
    BadInlets,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteRow {
    pub name: String,
    pub exchanger: Exchanger,
    pub flow: FlowMode,
    pub requires: BTreeMap<NodeId, ValveState>,
}

impl RouteRow {
    pub fn matches(&self, valves: &BTreeMap<NodeId, ValveState>) -> bool {
        self.requires.iter().all(|(id, want)| valves.get(id) == Some(want))
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RoutingTable {
    pub rows: Vec<RouteRow>,
}

impl RoutingTable {
    pub fn check_against(&self, model: &SceneModel) -> Result<(), PlantError> {
        for row in &self.rows {
            for id in row.requires.keys() {
                if !model.valves().any(|v| &v.id == id) {
                    return Err(PlantError::UnknownValve { row: row.name.clone(), valve: id.as_str().into() });
                }
            }
        }
        Ok(())
    }
}

/// First matching row's route, or `(Mixed, Undefined)` when no row matches.
pub fn route(valves: &BTreeMap<NodeId, ValveState>, table: &RoutingTable) -> (Exchanger, FlowMode) {
    table
        .rows
        .iter()
        .find(|row| row.matches(valves))
        .map(|row| (row.exchanger, row.flow))
        .unwrap_or((Exchanger::Mixed, FlowMode::Undefined))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectivenessEntry {
    pub exchanger: Exchanger,
    pub flow: FlowMode,
    pub effectiveness: f64,
}

/// Heat-exchange effectiveness per route. Routes absent from the table,
/// including `(Mixed, Undefined)`, have effectiveness 0.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EffectivenessTable {
    pub entries: Vec<EffectivenessEntry>,
}

impl EffectivenessTable {
    pub fn validate(&self) -> Result<(), PlantError> {
        for e in &self.entries {
            if !(0.0..1.0).contains(&e.effectiveness) {
                return Err(PlantError::EffectivenessOutOfRange {
                    exchanger: e.exchanger,
                    flow: e.flow,
                    value: e.effectiveness,
                });
            }
        }
        Ok(())
    }

    pub fn lookup(&self, exchanger: Exchanger, flow: FlowMode) -> Result<f64, PlantError> {
        match self.entries.iter().find(|e| e.exchanger == exchanger && e.flow == flow) {
            Some(e) if !(0.0..1.0).contains(&e.effectiveness) => Err(PlantError::EffectivenessOutOfRange {
                exchanger,
                flow,
                value: e.effectiveness,
            }),
            Some(e) => Ok(e.effectiveness),
            None => Ok(0.0),
        }
    }
}

/// Fixed plant configuration: topology, thermal table and inlet temperatures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantConfig {
    pub routing: RoutingTable,
    pub effectiveness: EffectivenessTable,
    /// °C
    pub hot_inlet_c: f64,
    /// °C
    pub cold_inlet_c: f64,
}

impl PlantConfig {
    pub fn validate(&self) -> Result<(), PlantError> {
        self.effectiveness.validate()?;
        if !self.hot_inlet_c.is_finite() || !self.cold_inlet_c.is_finite() || self.hot_inlet_c < self.cold_inlet_c {
            return Err(PlantError::BadInlets);
        }
        Ok(())
    }
}

/// Live plant state. Route and outlet temperature are derived on demand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantState {
    pub valve_states: BTreeMap<NodeId, ValveState>,
    pub hot_inlet_c: f64,
    pub cold_inlet_c: f64,
}

impl PlantState {
    pub fn from_model(model: &SceneModel, config: &PlantConfig) -> PlantState {
        let valve_states = model
            .valves()
            .filter_map(|n| n.valve_state.map(|s| (n.id.clone(), s)))
            .collect();
        PlantState { valve_states, hot_inlet_c: config.hot_inlet_c, cold_inlet_c: config.cold_inlet_c }
    }

    pub fn route(&self, config: &PlantConfig) -> (Exchanger, FlowMode) {
        route(&self.valve_states, &config.routing)
    }

    pub fn hot_outlet_c(&self, config: &PlantConfig) -> Result<f64, PlantError> {
        outlet_temperature(self, config)
    }

    pub fn toggle(&mut self, valve: &NodeId) {
        if let Some(s) = self.valve_states.get_mut(valve) {
            *s = s.toggled();
        }
    }
}

/// `T_hot_out = T_hot_in − ε·(T_hot_in − T_cold_in)` with ε looked up by the
/// active route.
pub fn outlet_temperature(plant: &PlantState, config: &PlantConfig) -> Result<f64, PlantError> {
    let (exchanger, flow) = plant.route(config);
    let eps = config.effectiveness.lookup(exchanger, flow)?;
    Ok(plant.hot_inlet_c - eps * (plant.hot_inlet_c - plant.cold_inlet_c))
}

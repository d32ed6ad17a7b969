//! The heat-exchanger inspection: plant, plan, agent behaviour and the
//! session log they produce.

pub mod agents;
pub mod checks;
pub mod log;
pub mod plan;
pub mod plant;
pub mod profile;

use thiserror::Error;

pub use agents::{run_session, SessionRun, SessionSetup};
pub use log::{Condition, EventKind, LogEvent, SessionLog};
pub use plan::{build_default_plan, InspectionPlan, PlanError};
pub use plant::{PlantConfig, PlantError, PlantState};
pub use profile::{OperatorProfile, ProfileError, ProfileSet};

use crate::geometry::Pose;
use crate::published::PublishedFigures;
use crate::scene::{SceneError, SceneModel};

/// The shipped plant, anchored with the marker at the world origin.
pub fn default_setup() -> Result<SessionSetup, SceneError> {
    let model = SceneModel::load(&crate::defaults::plant_descriptor())?.anchored(&Pose::IDENTITY);
    Ok(SessionSetup { model, plant: crate::defaults::plant_config() })
}

/// Profiles calibrated to `figures` for sessions following `plan`.
pub fn calibrated_profiles(figures: &PublishedFigures, plan: &InspectionPlan) -> Result<ProfileSet, ProfileError> {
    profile::calibrate(
        &figures.calibration_target(Condition::Tablet),
        &figures.calibration_target(Condition::Hmd),
        &profile::CalibrationInputs::default(),
        profile::PlanShape::of(plan),
    )
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Session(#[from] crate::session::SessionError),
    #[error(transparent)]
    Replica(#[from] crate::replica::ReplicaError),
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Link(#[from] crate::net::LinkError),
    #[error("session did not settle within {0} events")]
    Livelock(usize),
    #[error("protocol violation: {0}")]
    Protocol(&'static str),
    #[error("session log is malformed: {0}")]
    Incomplete(&'static str),
}

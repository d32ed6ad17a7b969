//! Run configuration and the JSON input files: plant descriptor, plan,
//! routing/effectiveness tables, operator profiles and study figures.

use std::fs;
use std::path::{Path, PathBuf};

use replisync_core::geometry::Pose;
use replisync_core::published::PublishedFigures;
use replisync_core::scenario::plan::registry;
use replisync_core::scenario::{
    build_default_plan, calibrated_profiles, Condition, InspectionPlan, PlantConfig, ProfileSet, SessionSetup,
};
use replisync_core::scene::{ModelDescriptor, SceneModel};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::CliError;

/// Participants per condition in the original study.
pub fn study_size(condition: Condition) -> usize {
    match condition {
        Condition::Tablet => 19,
        Condition::Hmd => 20,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub conditions: Vec<Condition>,
    /// Sessions per condition; `None` uses the study's group sizes.
    pub sessions: Option<usize>,
    pub seed: u64,
    pub model: Option<PathBuf>,
    pub plan: Option<PathBuf>,
    pub routing: Option<PathBuf>,
    pub profile: Option<PathBuf>,
    pub out: PathBuf,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.sessions == Some(0) {
            return Err(CliError::config("--sessions must be at least 1"));
        }
        if self.conditions.is_empty() {
            return Err(CliError::config("no condition selected"));
        }
        Ok(())
    }

    pub fn sessions_for(&self, condition: Condition) -> usize {
        self.sessions.unwrap_or_else(|| study_size(condition))
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

/// Pretty JSON with a trailing newline.
pub fn to_json_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("in-memory values serialize");
    s.push('\n');
    s
}

/// Everything a batch of sessions needs, resolved from files or defaults.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub setup: SessionSetup,
    pub plan: InspectionPlan,
    pub profiles: ProfileSet,
}

impl Inputs {
    pub fn load(config: &RunConfig) -> Result<Inputs, CliError> {
        let descriptor: ModelDescriptor = match &config.model {
            Some(p) => read_json(p)?,
            None => replisync_core::defaults::plant_descriptor(),
        };
        let model = SceneModel::load(&descriptor).map_err(CliError::config)?.anchored(&Pose::IDENTITY);
        let plant: PlantConfig = match &config.routing {
            Some(p) => read_json(p)?,
            None => replisync_core::defaults::plant_config(),
        };
        plant.validate().map_err(CliError::config)?;
        plant.routing.check_against(&model).map_err(CliError::config)?;
        let plan: InspectionPlan = match &config.plan {
            Some(p) => read_json(p)?,
            None => build_default_plan(&registry(&model), None).map_err(CliError::config)?,
        };
        plan.validate(&registry(&model)).map_err(CliError::config)?;
        let profiles: ProfileSet = match &config.profile {
            Some(p) => read_json(p)?,
            None => calibrated_profiles(&PublishedFigures::default(), &plan).map_err(CliError::config)?,
        };
        profiles.validate().map_err(CliError::config)?;
        Ok(Inputs { setup: SessionSetup { model, plant }, plan, profiles })
    }
}

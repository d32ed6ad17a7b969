//! Batches of sessions: per-session seeds, parallel execution and ordered
//! assembly of the results.

use rayon::prelude::*;
use replisync_core::metrics::SessionMetrics;
use replisync_core::rng::split_seed;
use replisync_core::scenario::{run_session, Condition, InspectionPlan, ProfileSet, SessionRun, SessionSetup};

use crate::error::CliError;

/// Identity of one session in a batch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionSpec {
    pub id: String,
    pub condition: Condition,
    pub seed: u64,
}

/// `tablet-001`, `tablet-002`, ..., then the HMD sessions, each with a seed
/// split from `seed` by its id.
pub fn plan_batch(seed: u64, groups: &[(Condition, usize)]) -> Vec<SessionSpec> {
    groups
        .iter()
        .flat_map(|&(condition, n)| {
            (1..=n).map(move |i| {
                let id = format!("{}-{i:03}", condition.as_str());
                SessionSpec { seed: split_seed(seed, id.as_bytes()), id, condition }
            })
        })
        .collect()
}

/// Plays every session, in parallel, and returns the runs in batch order.
pub fn run_batch(
    setup: &SessionSetup,
    plan: &InspectionPlan,
    profiles: &ProfileSet,
    specs: &[SessionSpec],
) -> Result<Vec<SessionRun>, CliError> {
    specs
        .par_iter()
        .map(|s| {
            run_session(setup, plan, s.condition, profiles, s.seed).map_err(|e| CliError::Run(format!("{}: {e}", s.id)))
        })
        .collect()
}

/// Metrics only, without keeping logs and traces around.
pub fn metrics_batch(
    setup: &SessionSetup,
    plan: &InspectionPlan,
    profiles: &ProfileSet,
    specs: &[SessionSpec],
) -> Result<Vec<SessionMetrics>, CliError> {
    specs
        .par_iter()
        .map(|s| {
            let run = run_session(setup, plan, s.condition, profiles, s.seed)
                .map_err(|e| CliError::Run(format!("{}: {e}", s.id)))?;
            SessionMetrics::from_log(s.id.clone(), &run.log).map_err(|e| CliError::Run(format!("{}: {e}", s.id)))
        })
        .collect()
}

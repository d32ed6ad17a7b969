//! Integrity checks on finished sessions.

use alloc::collections::BTreeMap;

use thiserror::Error;

use super::agents::{SessionRun, SessionSetup};
use super::log::{Condition, EventKind, SessionLog};
use super::plant::PlantState;
use crate::geometry::Vec3;
use crate::net::Trace;
use crate::replica::Role;
use crate::scene::NodeId;
use crate::session::{Directive, Payload};

/// Gaze and elevation tolerance for the god-view check.
pub const POSE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CheckError {
    #[error("valve {0} did not return to its initial state")]
    NotRestored(NodeId),
    #[error("instruction at t={t_ms} ms for {valve} has no matching replica indication")]
    Unpaired { t_ms: u64, valve: NodeId },
    #[error("indication of {valve} at t={t_ms} ms was not delivered with a commit")]
    NoCommit { t_ms: u64, valve: NodeId },
    #[error("expert avatar at host_seq {host_seq} is {got} m above the operator, expected {expected}")]
    Elevation { host_seq: u64, expected: f64, got: f64 },
    #[error("expert avatar at host_seq {0} does not look at the world anchor")]
    Gaze(u64),
}

/// Physical valve states at hang-up equal those at the start.
pub fn restores_initial_state(setup: &SessionSetup, run: &SessionRun) -> Result<(), CheckError> {
    let initial = PlantState::from_model(&setup.model, &setup.plant);
    for (valve, state) in &initial.valve_states {
        if run.plant.valve_states.get(valve) != Some(state) {
            return Err(CheckError::NotRestored(valve.clone()));
        }
    }
    Ok(())
}

/// In an HMD session, every instruction naming a valve to find or operate
/// follows an indication of that valve, delivered in a commit at the same
/// instant. Returns the number of instructions checked; Tablet logs
/// trivially pass with 0.
pub fn hmd_pairing(log: &SessionLog) -> Result<usize, CheckError> {
    if log.condition != Condition::Hmd {
        return Ok(0);
    }
    let mut last_indication: Option<(u64, &NodeId)> = None;
    let mut checked = 0;
    for (i, e) in log.events.iter().enumerate() {
        match &e.kind {
            EventKind::ReplicaIndication { valve } => last_indication = Some((e.t_ms, valve)),
            EventKind::Instruction { directive, .. } => {
                let valve = match directive {
                    Directive::Locate { valve, .. } | Directive::Manipulate { valve, .. } => valve,
                    _ => continue,
                };
                let unpaired = || CheckError::Unpaired { t_ms: e.t_ms, valve: valve.clone() };
                let (t, indicated) = last_indication.ok_or_else(unpaired)?;
                if indicated != valve {
                    return Err(unpaired());
                }
                let committed = log.events[..i]
                    .iter()
                    .any(|c| c.t_ms == t && matches!(c.kind, EventKind::SyncCommit { .. }));
                if !committed {
                    return Err(CheckError::NoCommit { t_ms: t, valve: valve.clone() });
                }
                checked += 1;
            }
            _ => {}
        }
    }
    Ok(checked)
}

/// Replays Avatar envelopes in host order and checks every Expert placement
/// against the latest Operator head: `elevation` meters above it, looking
/// at `look_at`. Returns the number of placements checked.
pub fn god_view(trace: &Trace, elevation: f64, look_at: Vec3) -> Result<usize, CheckError> {
    let mut avatars = BTreeMap::new();
    for entry in trace {
        // Unsequenced copies are client-to-host uploads, not room state.
        if let (Payload::Avatar(a), true) = (&entry.envelope.payload, entry.envelope.host_seq > 0) {
            avatars.insert(entry.envelope.host_seq, a);
        }
    }
    let mut operator: Option<Vec3> = None;
    let mut checked = 0;
    for (&host_seq, a) in &avatars {
        let head = a.head_pose.position;
        match a.role {
            Role::Operator => operator = Some(head),
            Role::Expert => {
                let Some(op) = operator else { continue };
                let got = head.y - op.y;
                let horizontal = Vec3::new(head.x - op.x, 0.0, head.z - op.z).norm();
                if libm::fabs(got - elevation) > POSE_TOLERANCE || horizontal > POSE_TOLERANCE {
                    return Err(CheckError::Elevation { host_seq, expected: elevation, got });
                }
                let forward = a.head_pose.orientation.rotate(Vec3::new(0.0, 0.0, 1.0));
                let to_anchor = (look_at - head).normalized().map_err(|_| CheckError::Gaze(host_seq))?;
                if (forward - to_anchor).norm() > 1e-6 {
                    return Err(CheckError::Gaze(host_seq));
                }
                checked += 1;
            }
        }
    }
    Ok(checked)
}

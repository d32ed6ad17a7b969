//! Replicas: client-private, reduced-scale copies of the shared scene model.
//!
//! Edits made on a replica are visible only to its owner until the owner
//! synchronizes. Synchronization merges the pending edits into the
//! authoritative shared model field by field:
//!
//! - annotations already in the shared model are retained; only an Expert
//!   request may remove them. Added annotations are deduplicated by id, first
//!   writer kept.
//! - a node field last written by the Expert is never overwritten by an
//!   Operator edit (`expert-precedence`), however old the Expert write is.
//! - otherwise the request being merged wins, so between authors of the same
//!   role the later one in host order wins.
//!
//! A rejected edit does not abort its batch. The shared version is bumped
//! once per batch that has at least one accepted edit.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scene::{ApplyError, Edit, EditOp, SceneModel};
use crate::session::ClientId;

pub const DEFAULT_SCALE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Expert,
    Operator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectReason {
    /// The field was last written by the Expert and the request is the Operator's.
    ExpertPrecedence,
    /// An Operator request tried to remove an annotation already in the shared model.
    AnnotationRetained,
    /// An annotation with the same id is already in the shared model.
    DuplicateAnnotation,
    /// Target node or annotation does not exist in the shared model.
    InvalidTarget,
    /// Edit author role differs from the requesting client's role.
    RoleMismatch,
}

impl RejectReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RejectReason::ExpertPrecedence => "expert-precedence",
            RejectReason::AnnotationRetained => "annotation-retained",
            RejectReason::DuplicateAnnotation => "duplicate-annotation",
            RejectReason::InvalidTarget => "invalid-target",
            RejectReason::RoleMismatch => "role-mismatch",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub edit: Edit,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyncRequest {
    pub owner: ClientId,
    pub owner_role: Role,
    pub base_version: u64,
    pub edits: Vec<Edit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeOutcome {
    pub merged: SceneModel,
    pub accepted: Vec<Edit>,
    pub rejected: Vec<Rejection>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReplicaError {
    #[error("replica scale must be a positive finite number, got {0}")]
    InvalidScale(f64),
    #[error(transparent)]
    Apply(#[from] ApplyError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SyncError {
    #[error("request base version {base} is ahead of shared version {shared}")]
    BaseAhead { base: u64, shared: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replica {
    pub owner: ClientId,
    pub owner_role: Role,
    /// Display-only scale of the copy relative to the shared model.
    pub scale_factor: f64,
    /// Shared-model version the working copy was last rebuilt from.
    pub base_version: u64,
    pub working: SceneModel,
    /// Edits not yet acknowledged by a commit, in creation order.
    pub pending: Vec<Edit>,
    /// Edits the host refused, kept for the owner to inspect.
    pub rejected: Vec<Rejection>,
    next_seq: u64,
    /// Highest `author_seq` already sent in a sync request.
    submitted_upto: Option<u64>,
}

pub fn create_replica(shared: &SceneModel, owner: ClientId, role: Role, scale: f64) -> Result<Replica, ReplicaError> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(ReplicaError::InvalidScale(scale));
    }
    Ok(Replica {
        owner,
        owner_role: role,
        scale_factor: scale,
        base_version: shared.version,
        working: shared.clone(),
        pending: Vec::new(),
        rejected: Vec::new(),
        next_seq: 0,
        submitted_upto: None,
    })
}

impl Replica {
    /// Wraps `op` as an edit authored by this replica's owner with the next
    /// sequence number.
    pub fn author(&self, op: EditOp) -> Edit {
        Edit::new(self.owner_role, self.next_seq, op)
    }

    /// Applies `edit` to the working copy and queues it. The shared model is
    /// never involved. On error the replica is left unchanged.
    pub fn edit_replica(&self, edit: Edit) -> Result<Replica, ReplicaError> {
        let mut out = self.clone();
        out.push_edit(edit)?;
        Ok(out)
    }

    /// In-place form of [`edit_replica`](Self::edit_replica) that authors the edit.
    pub fn edit(&mut self, op: EditOp) -> Result<&Edit, ReplicaError> {
        let edit = self.author(op);
        self.push_edit(edit)?;
        Ok(self.pending.last().expect("just pushed"))
    }

    fn push_edit(&mut self, edit: Edit) -> Result<(), ReplicaError> {
        self.working = self.working.apply_edit(&edit)?;
        self.next_seq = self.next_seq.max(edit.author_seq + 1);
        self.pending.push(edit);
        Ok(())
    }

    /// Pending edits not yet sent, packaged for the host. Marks them as
    /// submitted so they are not sent twice while the commit is in flight.
    pub fn sync_request(&mut self) -> SyncRequest {
        let edits: Vec<Edit> = self
            .pending
            .iter()
            .filter(|e| self.submitted_upto.map_or(true, |s| e.author_seq > s))
            .cloned()
            .collect();
        if let Some(last) = edits.last() {
            self.submitted_upto = Some(last.author_seq);
        }
        SyncRequest {
            owner: self.owner.clone(),
            owner_role: self.owner_role,
            base_version: self.base_version,
            edits,
        }
    }

    /// Records the host's verdict on this replica's own request: accepted and
    /// rejected edits leave `pending`; rejected ones move to `rejected`.
    pub fn settle(&mut self, accepted: &[Edit], rejected: &[Rejection]) {
        let done: BTreeSet<u64> = accepted
            .iter()
            .chain(rejected.iter().map(|r| &r.edit))
            .filter(|e| e.author_role == self.owner_role)
            .map(|e| e.author_seq)
            .collect();
        self.pending.retain(|e| !done.contains(&e.author_seq));
        self.rejected.extend(rejected.iter().cloned());
    }

    /// Rebuilds the working copy on top of a newer shared model, re-applying
    /// pending edits that are still valid. Returns the rebased replica and the
    /// dropped edits.
    pub fn rebase_replica(&self, shared: &SceneModel) -> (Replica, Vec<Edit>) {
        let mut out = self.clone();
        let dropped = out.rebase_in_place(shared);
        (out, dropped)
    }

    pub fn rebase_in_place(&mut self, shared: &SceneModel) -> Vec<Edit> {
        let mut working = shared.clone();
        let mut kept = Vec::with_capacity(self.pending.len());
        let mut dropped = Vec::new();
        for edit in self.pending.drain(..) {
            match working.apply_edit(&edit) {
                Ok(next) => {
                    working = next;
                    kept.push(edit);
                }
                Err(_) => dropped.push(edit),
            }
        }
        self.pending = kept;
        self.working = working;
        self.base_version = shared.version;
        dropped
    }
}

/// Merges a sync request into the shared model.
pub fn synchronize(request: &SyncRequest, shared: &SceneModel) -> Result<MergeOutcome, SyncError> {
    if request.base_version > shared.version {
        return Err(SyncError::BaseAhead { base: request.base_version, shared: shared.version });
    }
    let role = request.owner_role;
    let new_version = shared.version + 1;
    let retained: BTreeSet<&String> = shared.annotations.keys().collect();
    let mut merged = shared.clone();
    let mut accepted = Vec::new();
    let mut rejected = Vec::new();

    for edit in &request.edits {
        match judge(edit, role, &merged, &retained) {
            Some(reason) => rejected.push(Rejection { edit: edit.clone(), reason }),
            None => {
                merged.apply_in_place(edit, new_version).expect("judged applicable");
                accepted.push(edit.clone());
            }
        }
    }

    if accepted.is_empty() {
        merged = shared.clone();
    } else {
        merged.version = new_version;
    }
    Ok(MergeOutcome { merged, accepted, rejected })
}

fn judge(edit: &Edit, role: Role, merged: &SceneModel, retained: &BTreeSet<&String>) -> Option<RejectReason> {
    if edit.author_role != role {
        return Some(RejectReason::RoleMismatch);
    }
    match &edit.op {
        EditOp::AddAnnotation { annotation } if merged.annotations.contains_key(&annotation.id) => {
            return Some(RejectReason::DuplicateAnnotation);
        }
        EditOp::RemoveAnnotation { id } if role == Role::Operator && retained.contains(id) => {
            return Some(RejectReason::AnnotationRetained);
        }
        _ => {}
    }
    if merged.validate(edit).is_err() {
        return Some(RejectReason::InvalidTarget);
    }
    if let Some((node, field)) = edit.op.field() {
        if role == Role::Operator && merged.stamp(node, field).is_some_and(|s| s.role == Role::Expert) {
            return Some(RejectReason::ExpertPrecedence);
        }
    }
    None
}

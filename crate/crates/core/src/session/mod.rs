//! Rooms, roles and envelopes, with the host acting as the single sequencer.
//!
//! Clients never talk to each other directly: every envelope goes to the
//! host, which processes envelopes one at a time, stamps each outgoing one
//! with the next `host_seq` of the room and forwards it. Envelopes produced
//! on behalf of a client keep that client as `sender` (and its `sender_seq`);
//! commits and avatar placements are authored by the host itself.

pub mod speech;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, Pose, Quat, Vec3};
use crate::replica::{self, create_replica, Rejection, Replica, ReplicaError, Role, SyncError, SyncRequest};
use crate::scene::{ApplyError, Edit, SceneModel};

pub use speech::{BlockKind, Directive, Feedback, Instruction};

macro_rules! string_id {
    ($name:ident) => {
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(try_from = "String", into = "String")]
        pub struct $name(String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Result<Self, SessionError> {
                let id = id.into();
                if id.is_empty() {
                    return Err(SessionError::EmptyId);
                }
                Ok($name(id))
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl TryFrom<String> for $name {
            type Error = SessionError;
            fn try_from(s: String) -> Result<Self, SessionError> {
                $name::new(s)
            }
        }

        impl From<$name> for String {
            fn from(id: $name) -> String {
                id.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }
    };
}

string_id!(ClientId);
string_id!(RoomId);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvatarState {
    pub client: ClientId,
    pub role: Role,
    pub head_pose: Pose,
    /// Unit vector.
    pub gaze_direction: Vec3,
}

impl AvatarState {
    pub fn new(client: ClientId, role: Role, head_pose: Pose, gaze: Vec3) -> Result<Self, SessionError> {
        let gaze_direction = gaze.normalized().map_err(SessionError::Geometry)?;
        Ok(AvatarState { client, role, head_pose, gaze_direction })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyncCommit {
    /// Client whose request produced this commit.
    pub origin: ClientId,
    /// `sender_seq` of the originating request envelope.
    pub request_seq: u64,
    pub accepted: Vec<Edit>,
    pub rejected: Vec<Rejection>,
    pub new_version: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "body", rename_all = "snake_case")]
pub enum Payload {
    Join { role: Role },
    Leave,
    Avatar(AvatarState),
    SyncReq(SyncRequest),
    SyncCommit(SyncCommit),
    Instruction(Instruction),
    Feedback(Feedback),
    CallStart,
    CallEnd,
    /// Opaque media-signaling bytes, relayed untouched.
    MediaSignal(Vec<u8>),
    /// Host-originated copy of the shared model, sent to a client right
    /// after its Join so it can replay later commits.
    Snapshot(SceneModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    /// Room order assigned by the host; 0 until the host has sequenced it.
    pub host_seq: u64,
    pub sender: ClientId,
    /// Per-sender counter starting at 1.
    pub sender_seq: u64,
    pub room: RoomId,
    pub payload: Payload,
}

/// An envelope addressed to one member.
#[derive(Debug, Clone, PartialEq)]
pub struct Outgoing {
    pub to: ClientId,
    pub envelope: Envelope,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SessionError {
    #[error("identifier must not be empty")]
    EmptyId,
    #[error("the {0:?} role is already taken in this room")]
    RoleOccupied(Role),
    #[error("{0} is already a member")]
    AlreadyMember(ClientId),
    #[error("{0} is not a member of the room")]
    NotMember(ClientId),
    #[error("no peer to relay to")]
    NoPeer,
    #[error("envelope addressed to room {got}, expected {expected}")]
    WrongRoom { expected: RoomId, got: RoomId },
    #[error("sync request owner {owner} or role does not match sender {sender}")]
    OwnerMismatch { owner: ClientId, sender: ClientId },
    #[error("only the host may issue commits and snapshots (got one from {0})")]
    ForgedCommit(ClientId),
    #[error("sender {sender}: expected sender_seq {expected}, got {got}")]
    SequenceGap { sender: ClientId, expected: u64, got: u64 },
    #[error("host_seq {got} does not follow {last}")]
    HostSeqRegression { last: u64, got: u64 },
    #[error("commit version {got} does not follow local version {local}")]
    CommitVersion { local: u64, got: u64 },
    #[error("expert elevation must be positive, got {0}")]
    InvalidElevation(f64),
    #[error(transparent)]
    Geometry(GeometryError),
    #[error(transparent)]
    Sync(#[from] SyncError),
    #[error(transparent)]
    Apply(#[from] ApplyError),
    #[error(transparent)]
    Replica(#[from] ReplicaError),
}

/// God point of view: the Expert's avatar floats above the Operator's.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpertPlacement {
    /// Meters above the Operator's head.
    pub elevation: f64,
    /// Horizontal (x, z) offset from the Operator.
    pub horizontal_offset: [f64; 2],
}

impl Default for ExpertPlacement {
    fn default() -> Self {
        ExpertPlacement { elevation: 1.5, horizontal_offset: [0.0, 0.0] }
    }
}

/// Orientation whose forward axis (+Z) points along `dir`, with +Y up.
pub fn look_rotation(dir: Vec3) -> Quat {
    let horizontal = libm::sqrt(dir.x * dir.x + dir.z * dir.z);
    if horizontal == 0.0 && dir.y == 0.0 {
        return Quat::IDENTITY;
    }
    let yaw = libm::atan2(dir.x, dir.z);
    let pitch = libm::atan2(-dir.y, horizontal);
    let pitch_q = Quat::from_axis_angle(Vec3::new(1.0, 0.0, 0.0), pitch).expect("unit axis");
    Quat::from_yaw(yaw) * pitch_q
}

/// Expert head pose above the Operator, looking at `look_at`.
pub fn place_expert_avatar(
    operator: &AvatarState,
    placement: &ExpertPlacement,
    look_at: Vec3,
) -> Result<Pose, SessionError> {
    if !(placement.elevation.is_finite() && placement.elevation > 0.0) {
        return Err(SessionError::InvalidElevation(placement.elevation));
    }
    let op = operator.head_pose.position;
    let position = Vec3::new(
        op.x + placement.horizontal_offset[0],
        op.y + placement.elevation,
        op.z + placement.horizontal_offset[1],
    );
    Ok(Pose::new(position, look_rotation(look_at - position)))
}

/// Authoritative room state held by the host.
#[derive(Debug, Clone, PartialEq)]
pub struct RoomState {
    pub room: RoomId,
    pub host: ClientId,
    pub members: BTreeMap<ClientId, Role>,
    pub shared: SceneModel,
    pub next_host_seq: u64,
    pub avatars: BTreeMap<ClientId, AvatarState>,
    pub placement: ExpertPlacement,
    last_sender_seq: BTreeMap<ClientId, u64>,
}

impl RoomState {
    pub fn new(room: RoomId, host: ClientId, shared: SceneModel) -> Self {
        RoomState {
            room,
            host,
            members: BTreeMap::new(),
            shared,
            next_host_seq: 1,
            avatars: BTreeMap::new(),
            placement: ExpertPlacement::default(),
            last_sender_seq: BTreeMap::new(),
        }
    }

    pub fn with_placement(mut self, placement: ExpertPlacement) -> Self {
        self.placement = placement;
        self
    }

    fn member_with(&self, role: Role) -> Option<&ClientId> {
        self.members.iter().find(|(_, r)| **r == role).map(|(c, _)| c)
    }

    fn peers_of<'a>(&'a self, client: &'a ClientId) -> impl Iterator<Item = &'a ClientId> + 'a {
        self.members.keys().filter(move |c| *c != client)
    }

    fn sequence(&mut self, mut envelope: Envelope) -> Envelope {
        envelope.host_seq = self.next_host_seq;
        self.next_host_seq += 1;
        envelope
    }

    fn host_envelope(&mut self, payload: Payload) -> Envelope {
        let seq = self.next_host_seq;
        let envelope = Envelope {
            host_seq: 0,
            sender: self.host.clone(),
            sender_seq: seq,
            room: self.room.clone(),
            payload,
        };
        self.sequence(envelope)
    }

    fn next_seq_for(&self, client: &ClientId) -> u64 {
        self.last_sender_seq.get(client).copied().unwrap_or(0) + 1
    }

    fn client_envelope(&self, client: &ClientId, payload: Payload) -> Envelope {
        Envelope {
            host_seq: 0,
            sender: client.clone(),
            sender_seq: self.next_seq_for(client),
            room: self.room.clone(),
            payload,
        }
    }

    fn to_all(&self, envelope: &Envelope) -> Vec<Outgoing> {
        self.members.keys().map(|to| Outgoing { to: to.clone(), envelope: envelope.clone() }).collect()
    }

    /// Adds `client` under `role` and returns the sequenced Join announcement.
    pub fn join_room(&mut self, client: ClientId, role: Role) -> Result<Envelope, SessionError> {
        let env = self.client_envelope(&client, Payload::Join { role });
        let out = self.handle(env)?;
        Ok(out.into_iter().next().expect("join is broadcast to the joiner").envelope)
    }

    /// Runs a sync request through the merge and returns the sequenced commit.
    pub fn submit_sync(&mut self, request: SyncRequest) -> Result<Envelope, SessionError> {
        let env = self.client_envelope(&request.owner.clone(), Payload::SyncReq(request));
        let out = self.handle(env)?;
        Ok(out.into_iter().next().expect("commit is broadcast").envelope)
    }

    /// Relays an opaque media blob from `from` to the other member.
    pub fn relay_media(&mut self, from: ClientId, blob: Vec<u8>) -> Result<Outgoing, SessionError> {
        let env = self.client_envelope(&from, Payload::MediaSignal(blob));
        let mut out = self.handle(env)?;
        out.pop().ok_or(SessionError::NoPeer)
    }

    /// Processes one client envelope and returns what the host sends out.
    pub fn handle(&mut self, envelope: Envelope) -> Result<Vec<Outgoing>, SessionError> {
        if envelope.room != self.room {
            return Err(SessionError::WrongRoom { expected: self.room.clone(), got: envelope.room });
        }
        let sender = envelope.sender.clone();
        let expected = self.next_seq_for(&sender);
        if envelope.sender_seq != expected {
            return Err(SessionError::SequenceGap { sender, expected, got: envelope.sender_seq });
        }
        let is_member = self.members.contains_key(&sender);
        match &envelope.payload {
            Payload::Join { role } => {
                if is_member {
                    return Err(SessionError::AlreadyMember(sender));
                }
                if self.member_with(*role).is_some() {
                    return Err(SessionError::RoleOccupied(*role));
                }
            }
            Payload::SyncCommit(_) | Payload::Snapshot(_) => return Err(SessionError::ForgedCommit(sender)),
            _ if !is_member => return Err(SessionError::NotMember(sender)),
            _ => {}
        }
        self.last_sender_seq.insert(sender.clone(), envelope.sender_seq);

        match envelope.payload {
            Payload::Join { role } => {
                self.members.insert(sender.clone(), role);
                let env = self.sequence(envelope);
                let mut out = self.to_all(&env);
                let snapshot = self.host_envelope(Payload::Snapshot(self.shared.clone()));
                out.push(Outgoing { to: sender, envelope: snapshot });
                Ok(out)
            }
            Payload::Leave => {
                self.members.remove(&sender);
                self.avatars.remove(&sender);
                let env = self.sequence(envelope);
                let mut out = self.to_all(&env);
                out.push(Outgoing { to: sender, envelope: env });
                Ok(out)
            }
            Payload::SyncReq(ref request) => {
                if request.owner != sender || self.members.get(&sender) != Some(&request.owner_role) {
                    return Err(SessionError::OwnerMismatch { owner: request.owner.clone(), sender });
                }
                let outcome = replica::synchronize(request, &self.shared)?;
                self.shared = outcome.merged;
                let commit = SyncCommit {
                    origin: sender,
                    request_seq: envelope.sender_seq,
                    accepted: outcome.accepted,
                    rejected: outcome.rejected,
                    new_version: self.shared.version,
                };
                let env = self.host_envelope(Payload::SyncCommit(commit));
                Ok(self.to_all(&env))
            }
            Payload::Avatar(ref avatar) => {
                let mut avatar = avatar.clone();
                avatar.client = sender.clone();
                avatar.role = self.members[&sender];
                self.update_avatar(envelope, avatar)
            }
            Payload::MediaSignal(_) => {
                let peer = self.peers_of(&sender).next().cloned().ok_or(SessionError::NoPeer)?;
                let env = self.sequence(envelope);
                Ok(alloc::vec![Outgoing { to: peer, envelope: env }])
            }
            Payload::Instruction(_) | Payload::Feedback(_) | Payload::CallStart | Payload::CallEnd => {
                let peers: Vec<ClientId> = self.peers_of(&sender).cloned().collect();
                let env = self.sequence(envelope);
                Ok(peers.into_iter().map(|to| Outgoing { to, envelope: env.clone() }).collect())
            }
            Payload::SyncCommit(_) | Payload::Snapshot(_) => unreachable!("rejected above"),
        }
    }

    fn update_avatar(&mut self, envelope: Envelope, mut avatar: AvatarState) -> Result<Vec<Outgoing>, SessionError> {
        let sender = avatar.client.clone();
        let look_at = self.shared.world_anchor.position;
        let mut out = Vec::new();
        match avatar.role {
            Role::Operator => {
                self.avatars.insert(sender.clone(), avatar.clone());
                let env = self.sequence(envelope);
                for peer in self.peers_of(&sender) {
                    out.push(Outgoing { to: peer.clone(), envelope: env.clone() });
                }
                let expert = self.avatars.values().find(|a| a.role == Role::Expert).cloned();
                if let Some(mut expert) = expert {
                    expert.head_pose = place_expert_avatar(&avatar, &self.placement, look_at)?;
                    self.avatars.insert(expert.client.clone(), expert.clone());
                    let env = self.host_envelope(Payload::Avatar(expert));
                    out.extend(self.to_all(&env));
                }
            }
            Role::Expert => {
                let operator = self.avatars.values().find(|a| a.role == Role::Operator).cloned();
                if let Some(op) = operator {
                    avatar.head_pose = place_expert_avatar(&op, &self.placement, look_at)?;
                }
                self.avatars.insert(sender.clone(), avatar.clone());
                let mut env = self.sequence(envelope);
                env.payload = Payload::Avatar(avatar);
                out.extend(self.to_all(&env));
            }
        }
        Ok(out)
    }
}

/// Applies the accepted edits of a commit exactly as the host merged them.
pub fn apply_commit(shared: &mut SceneModel, commit: &SyncCommit) -> Result<(), SessionError> {
    if commit.accepted.is_empty() {
        if commit.new_version != shared.version {
            return Err(SessionError::CommitVersion { local: shared.version, got: commit.new_version });
        }
        return Ok(());
    }
    if commit.new_version != shared.version + 1 {
        return Err(SessionError::CommitVersion { local: shared.version, got: commit.new_version });
    }
    let mut next = shared.clone();
    for edit in &commit.accepted {
        next.apply_in_place(edit, commit.new_version)?;
    }
    next.version = commit.new_version;
    *shared = next;
    Ok(())
}

/// What a client learned from one delivered envelope.
#[derive(Debug, Clone, PartialEq)]
pub enum Received {
    Commit { own: bool, new_version: u64, dropped: Vec<Edit> },
    Other,
}

/// Client side of the protocol: a replayed copy of the shared model, the
/// client's replica and the ordering checks on the incoming stream.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientSession {
    pub id: ClientId,
    pub role: Role,
    pub room: RoomId,
    pub host: ClientId,
    pub shared: SceneModel,
    pub replica: Replica,
    pub members: BTreeMap<ClientId, Role>,
    next_sender_seq: u64,
    last_host_seq: u64,
    last_seen: BTreeMap<ClientId, u64>,
}

impl ClientSession {
    pub fn new(
        id: ClientId,
        role: Role,
        room: RoomId,
        host: ClientId,
        shared: SceneModel,
        scale: f64,
    ) -> Result<Self, SessionError> {
        let replica = create_replica(&shared, id.clone(), role, scale)?;
        Ok(ClientSession {
            id,
            role,
            room,
            host,
            shared,
            replica,
            members: BTreeMap::new(),
            next_sender_seq: 1,
            last_host_seq: 0,
            last_seen: BTreeMap::new(),
        })
    }

    /// Wraps `payload` in an envelope with the next `sender_seq`.
    pub fn envelope(&mut self, payload: Payload) -> Envelope {
        let env = Envelope {
            host_seq: 0,
            sender: self.id.clone(),
            sender_seq: self.next_sender_seq,
            room: self.room.clone(),
            payload,
        };
        self.next_sender_seq += 1;
        env
    }

    pub fn join(&mut self) -> Envelope {
        self.envelope(Payload::Join { role: self.role })
    }

    pub fn sync(&mut self) -> Envelope {
        let req = self.replica.sync_request();
        self.envelope(Payload::SyncReq(req))
    }

    pub fn last_host_seq(&self) -> u64 {
        self.last_host_seq
    }

    pub fn receive(&mut self, envelope: &Envelope) -> Result<Received, SessionError> {
        if envelope.host_seq <= self.last_host_seq {
            return Err(SessionError::HostSeqRegression { last: self.last_host_seq, got: envelope.host_seq });
        }
        let last = self.last_seen.get(&envelope.sender).copied().unwrap_or(0);
        if envelope.sender_seq <= last {
            return Err(SessionError::SequenceGap {
                sender: envelope.sender.clone(),
                expected: last + 1,
                got: envelope.sender_seq,
            });
        }
        self.last_host_seq = envelope.host_seq;
        self.last_seen.insert(envelope.sender.clone(), envelope.sender_seq);

        match &envelope.payload {
            Payload::Join { role } => {
                self.members.insert(envelope.sender.clone(), *role);
                Ok(Received::Other)
            }
            Payload::Leave => {
                self.members.remove(&envelope.sender);
                Ok(Received::Other)
            }
            Payload::SyncCommit(commit) => {
                if envelope.sender != self.host {
                    return Err(SessionError::ForgedCommit(envelope.sender.clone()));
                }
                apply_commit(&mut self.shared, commit)?;
                let own = commit.origin == self.id;
                if own {
                    self.replica.settle(&commit.accepted, &commit.rejected);
                }
                let dropped = self.replica.rebase_in_place(&self.shared);
                Ok(Received::Commit { own, new_version: commit.new_version, dropped })
            }
            Payload::Snapshot(model) => {
                if envelope.sender != self.host {
                    return Err(SessionError::ForgedCommit(envelope.sender.clone()));
                }
                self.shared = model.clone();
                self.replica.rebase_in_place(&self.shared);
                Ok(Received::Other)
            }
            _ => Ok(Received::Other),
        }
    }
}

//! Replica-based collaborative scene synchronization for remote
//! expert/operator maintenance sessions.
//!
//! The crate is `no_std` (with `alloc`) and contains no IO. It provides:
//!
//! - [`scene`]: the shared scene model of a physical installation, its atomic
//!   edit vocabulary, marker anchoring and diffing.
//! - [`replica`]: client-private copies of the shared model and the
//!   field-level merge applied when a replica is synchronized.
//! - [`session`]: rooms, roles, envelopes, the host sequencer and the client
//!   side of the protocol.
//! - [`net`]: a deterministic discrete-event network carrying envelopes.
//! - [`scenario`]: the heat-exchanger plant, inspection plans and the scripted
//!   agents that drive a full simulated session.
//! - [`metrics`]: error classification, ponderation and block timings.
//! - [`stats`]: Shapiro-Wilk, Mann-Whitney-Wilcoxon and one-way ANOVA.
//! - [`published`]: the group statistics reported for the original user study
//!   and the consistency checks derived from them.
#![no_std]
#![warn(rust_2018_idioms, unused_qualifications)]

extern crate alloc;

pub mod defaults;
pub mod geometry;
pub mod metrics;
pub mod net;
pub mod published;
pub mod replica;
pub mod rng;
pub mod scenario;
pub mod scene;
pub mod session;
pub mod stats;

pub use geometry::{Pose, Quat, Vec3};
pub use replica::{MergeOutcome, Replica, Role, SyncRequest};
pub use scene::{Edit, EditOp, NodeId, SceneModel};
pub use session::{ClientId, Envelope, Payload, RoomId};

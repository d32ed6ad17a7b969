mod common;

use proptest::prelude::*;
use rand::RngCore;
use replisync_core::net::{Ctx, Endpoint, LinkSpec, World};
use replisync_core::rng;
use replisync_core::session::{ClientSession, RoomState, SessionError};
use replisync_core::{ClientId, Envelope, Payload, Role, RoomId};

fn cid(s: &str) -> ClientId {
    ClientId::new(s).unwrap()
}

enum Peer {
    Host(Box<RoomState>),
    Client { session: Box<ClientSession>, outbox: Vec<Payload>, inbox: Vec<Envelope> },
}

impl Endpoint for Peer {
    type Error = SessionError;

    fn on_start(&mut self, ctx: &mut Ctx) -> Result<(), SessionError> {
        if let Peer::Client { session, .. } = self {
            let join = session.join();
            ctx.send(cid("host"), join);
            ctx.set_timer(500, 0);
        }
        Ok(())
    }

    fn on_envelope(&mut self, _from: &ClientId, env: &Envelope, ctx: &mut Ctx) -> Result<(), SessionError> {
        match self {
            Peer::Host(room) => {
                for out in room.handle(env.clone())? {
                    ctx.send(out.to, out.envelope);
                }
            }
            Peer::Client { session, inbox, .. } => {
                session.receive(env)?;
                inbox.push(env.clone());
            }
        }
        Ok(())
    }

    fn on_timer(&mut self, _token: u64, ctx: &mut Ctx) -> Result<(), SessionError> {
        if let Peer::Client { session, outbox, .. } = self {
            for p in outbox.drain(..) {
                let env = session.envelope(p);
                ctx.send(cid("host"), env);
            }
        }
        Ok(())
    }
}

fn client(id: &str, role: Role, outbox: Vec<Payload>) -> Peer {
    let session = ClientSession::new(cid(id), role, RoomId::new("r").unwrap(), cid("host"), common::plant(), 0.2).unwrap();
    Peer::Client { session: Box::new(session), outbox, inbox: Vec::new() }
}

fn inbox(world: World<Peer>, id: &str) -> Vec<Envelope> {
    match world.into_endpoints().remove(&cid(id)) {
        Some(Peer::Client { inbox, .. }) => inbox,
        _ => panic!("no client {id}"),
    }
}

#[test]
fn media_blob_is_relayed_byte_for_byte() {
    let mut blob = vec![0u8; 1024];
    rng::stream(7, b"blob").fill_bytes(&mut blob);
    let mut world = World::new(1, LinkSpec { base_latency_ms: 40, jitter_ms: 10 }).unwrap();
    world.add_endpoint(cid("host"), Peer::Host(Box::new(RoomState::new(RoomId::new("r").unwrap(), cid("host"), common::plant()))));
    world.add_endpoint(cid("operator"), client("operator", Role::Operator, vec![Payload::MediaSignal(blob.clone())]));
    world.add_endpoint(cid("expert"), client("expert", Role::Expert, vec![]));
    world.run_until_quiescent(1_000).unwrap();
    let got: Vec<Vec<u8>> = inbox(world, "expert")
        .into_iter()
        .filter_map(|e| match e.payload {
            Payload::MediaSignal(b) => Some(b),
            _ => None,
        })
        .collect();
    assert_eq!(got, vec![blob]);
}

#[test]
fn late_joiner_receives_the_current_model() {
    let mut room = RoomState::new(RoomId::new("r").unwrap(), cid("host"), common::plant());
    room.join_room(cid("expert"), Role::Expert).unwrap();
    let edit = replisync_core::EditOp::SetIndication { node: common::nid("2V4"), on: true };
    let mut expert = ClientSession::new(cid("expert"), Role::Expert, RoomId::new("r").unwrap(), cid("host"), common::plant(), 0.2).unwrap();
    expert.replica.edit(edit).unwrap();
    room.submit_sync(expert.replica.sync_request()).unwrap();

    let mut op = ClientSession::new(cid("operator"), Role::Operator, RoomId::new("r").unwrap(), cid("host"), common::plant(), 0.2).unwrap();
    let join = op.join();
    let out = room.handle(join).unwrap();
    for o in out.iter().filter(|o| o.to == cid("operator")) {
        op.receive(&o.envelope).unwrap();
    }
    assert!(op.shared.fields_eq(&room.shared));
    assert_eq!(op.replica.base_version, 1);
}

fn chatter() -> impl Strategy<Value = Vec<(bool, u8)>> {
    prop::collection::vec((any::<bool>(), 0u8..4), 1..40)
}

proptest! {
    /// Whatever the two clients send, every receiver sees a strictly rising
    /// host_seq and host-originated envelopes carry host_seq as sender_seq.
    #[test]
    fn host_order_is_total_and_gapless(msgs in chatter(), seed in any::<u64>()) {
        let mut outboxes = (Vec::new(), Vec::new());
        for (to_op, kind) in msgs {
            let p = match kind {
                0 => Payload::CallStart,
                1 => Payload::MediaSignal(vec![kind]),
                2 => Payload::Instruction(replisync_core::session::Directive::Summarize.into()),
                _ => Payload::SyncReq(replisync_core::SyncRequest {
                    owner: cid(if to_op { "operator" } else { "expert" }),
                    owner_role: if to_op { Role::Operator } else { Role::Expert },
                    base_version: 0,
                    edits: vec![],
                }),
            };
            if to_op { outboxes.0.push(p) } else { outboxes.1.push(p) }
        }
        let mut world = World::new(seed, LinkSpec { base_latency_ms: 30, jitter_ms: 30 }).unwrap();
        world.add_endpoint(cid("host"), Peer::Host(Box::new(RoomState::new(RoomId::new("r").unwrap(), cid("host"), common::plant()))));
        world.add_endpoint(cid("operator"), client("operator", Role::Operator, outboxes.0));
        world.add_endpoint(cid("expert"), client("expert", Role::Expert, outboxes.1));
        world.run_until_quiescent(10_000).unwrap();
        let endpoints = world.into_endpoints();
        let mut all_seqs = Vec::new();
        for (_, peer) in endpoints {
            if let Peer::Client { inbox, .. } = peer {
                for w in inbox.windows(2) {
                    prop_assert!(w[0].host_seq < w[1].host_seq);
                }
                for e in &inbox {
                    if e.sender == cid("host") {
                        prop_assert_eq!(e.sender_seq, e.host_seq);
                    }
                    all_seqs.push(e.host_seq);
                }
            }
        }
        all_seqs.sort_unstable();
        all_seqs.dedup();
        prop_assert_eq!(all_seqs[0], 1);
    }
}

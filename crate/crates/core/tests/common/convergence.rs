//! Randomised two-client sessions over the simulated network.

use rand::Rng;
use replisync_core::net::{Ctx, Endpoint, LinkSpec, World};
use replisync_core::replica::synchronize;
use replisync_core::rng::{self, SimRng};
use replisync_core::session::{ClientSession, RoomState, SessionError};
use replisync_core::{ClientId, Envelope, Payload, Role, RoomId, SceneModel};

use super::{plant, random_op};
const EDIT: u64 = 0;
const SYNC: u64 = 1;

struct Client {
    session: ClientSession,
    rng: SimRng,
    tag: &'static str,
    edits_left: u32,
    syncs_left: u32,
}

enum Node {
    Host(Box<RoomState>),
    Client(Box<Client>),
}

fn host_id() -> ClientId {
    ClientId::new("host").unwrap()
}

impl Endpoint for Node {
    type Error = SessionError;

    fn on_start(&mut self, ctx: &mut Ctx) -> Result<(), SessionError> {
        if let Node::Client(c) = self {
            let join = c.session.join();
            ctx.send(host_id(), join);
            ctx.set_timer(c.rng.random_range(1..150), EDIT);
            ctx.set_timer(c.rng.random_range(1..300), SYNC);
        }
        Ok(())
    }

    fn on_envelope(&mut self, _from: &ClientId, env: &Envelope, ctx: &mut Ctx) -> Result<(), SessionError> {
        match self {
            Node::Host(room) => {
                for out in room.handle(env.clone())? {
                    ctx.send(out.to, out.envelope);
                }
            }
            Node::Client(c) => {
                c.session.receive(env)?;
            }
        }
        Ok(())
    }

    fn on_timer(&mut self, token: u64, ctx: &mut Ctx) -> Result<(), SessionError> {
        let Node::Client(c) = self else { return Ok(()) };
        match token {
            EDIT if c.edits_left > 0 => {
                c.edits_left -= 1;
                let op = random_op(&mut c.rng, &c.session.replica.working, c.session.role, c.tag);
                c.session.replica.edit(op).expect("generated edits are valid");
                ctx.set_timer(c.rng.random_range(1..150), EDIT);
            }
            SYNC if c.syncs_left > 0 => {
                c.syncs_left -= 1;
                let env = c.session.sync();
                ctx.send(host_id(), env);
                // The last sync is scheduled after every edit has been made.
                let delay = if c.syncs_left == 1 { 150 * 20 } else { c.rng.random_range(1..300) };
                ctx.set_timer(delay, SYNC);
            }
            _ => {}
        }
        Ok(())
    }
}

fn client(id: &str, role: Role, tag: &'static str, shared: &SceneModel, r: &mut SimRng, seed: u64) -> Node {
    let session = ClientSession::new(
        ClientId::new(id).unwrap(),
        role,
        RoomId::new("room").unwrap(),
        host_id(),
        shared.clone(),
        0.2,
    )
    .unwrap();
    Node::Client(Box::new(Client {
        session,
        rng: rng::stream(seed, id.as_bytes()),
        tag,
        edits_left: r.random_range(0..20),
        syncs_left: r.random_range(2..8),
    }))
}

/// Runs one trial: random latency in 0..=120 ms, jitter up to min(40,
/// base), random edit and sync timers on an Expert and an Operator. Checks
/// that both clients' replays equal the host model and that the host model
/// equals the merge folded over the requests in host order. Returns the
/// number of requests merged.
pub fn trial(seed: u64) -> Result<usize, String> {
    let mut r = rng::stream(seed, b"trial");
    let base = r.random_range(0..=120u64);
    let jitter = r.random_range(0..=base.min(40));
    let shared = plant();
    let mut world = World::new(seed, LinkSpec { base_latency_ms: base, jitter_ms: jitter }).unwrap();
    world.add_endpoint(host_id(), Node::Host(Box::new(RoomState::new(RoomId::new("room").unwrap(), host_id(), shared.clone()))));
    world.add_endpoint(ClientId::new("expert").unwrap(), client("expert", Role::Expert, "e", &shared, &mut r, seed));
    world.add_endpoint(ClientId::new("operator").unwrap(), client("operator", Role::Operator, "o", &shared, &mut r, seed));
    let trace = world.run_until_quiescent(100_000).map_err(|e| format!("seed {seed}: {e}"))?;
    let endpoints = world.into_endpoints();

    let mut oracle = shared;
    let mut merged = 0;
    for entry in trace.iter().filter(|e| e.to == host_id()) {
        if let Payload::SyncReq(req) = &entry.envelope.payload {
            oracle = synchronize(req, &oracle).map_err(|e| format!("seed {seed}: {e}"))?.merged;
            merged += 1;
        }
    }
    let host = match &endpoints[&host_id()] {
        Node::Host(room) => room.shared.clone(),
        Node::Client(_) => unreachable!(),
    };
    if !host.fields_eq(&oracle) || host.version != oracle.version {
        return Err(format!("seed {seed}: host differs from the sequential fold"));
    }
    for (id, node) in &endpoints {
        if let Node::Client(c) = node {
            if !c.session.shared.fields_eq(&host) || c.session.shared.version != host.version {
                return Err(format!("seed {seed}: {id} diverged"));
            }
            if !c.session.replica.pending.is_empty() {
                return Err(format!("seed {seed}: {id} left edits unsent"));
            }
        }
    }
    Ok(merged)
}


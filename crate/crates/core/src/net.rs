//! Deterministic discrete-event network.
//!
//! Links are reliable and ordered: each delivery time is
//! `now + base + jitter_draw`, clamped to be no earlier than the previous
//! delivery on the same link. Jitter is uniform over the integers
//! `[-jitter, jitter]`, drawn from a per-link ChaCha8 stream whose seed is
//! `split_seed(world_seed, from ++ 0x00 ++ to)`.
//!
//! Pending events are processed in `(time, deliveries before timers,
//! host_seq, sender_seq, insertion order)` order, so a run is a pure function
//! of the initial world and its seed.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BinaryHeap};
use alloc::vec::Vec;
use core::cmp::{Ordering, Reverse};

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{split_seed, SimRng};
use crate::session::{ClientId, Envelope};

/// Milliseconds since session start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct SimClock {
    now: u64,
}

impl SimClock {
    pub fn at(now: u64) -> Self {
        SimClock { now }
    }

    pub fn now(&self) -> u64 {
        self.now
    }

    /// Moves the clock forward; never backward.
    pub fn advance_to(&mut self, t: u64) {
        self.now = self.now.max(t);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkConfig {
    pub base_latency_ms: u64,
    /// Half-width of the uniform jitter.
    pub jitter_ms: u64,
    pub seed: u64,
    /// Probability of silently losing an envelope. Zero unless testing gap
    /// detection; the transport is otherwise reliable.
    #[serde(default)]
    pub drop_probability: f64,
}

impl LinkConfig {
    pub fn new(base_latency_ms: u64, jitter_ms: u64, seed: u64) -> Result<Self, LinkError> {
        if jitter_ms > base_latency_ms {
            return Err(LinkError::JitterExceedsBase { base: base_latency_ms, jitter: jitter_ms });
        }
        Ok(LinkConfig { base_latency_ms, jitter_ms, seed, drop_probability: 0.0 })
    }

    pub fn with_drop_probability(mut self, p: f64) -> Result<Self, LinkError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(LinkError::DropProbability(p));
        }
        self.drop_probability = p;
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum LinkError {
    #[error("jitter {jitter} ms exceeds base latency {base} ms")]
    JitterExceedsBase { base: u64, jitter: u64 },
    #[error("drop probability {0} is outside [0, 1]")]
    DropProbability(f64),
}

/// Sending state of one directed link.
#[derive(Debug, Clone)]
pub struct Link {
    pub config: LinkConfig,
    rng: SimRng,
    last_delivery: u64,
}

impl Link {
    pub fn new(config: LinkConfig) -> Self {
        Link { config, rng: SimRng::seed_from_u64(config.seed), last_delivery: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimEvent {
    pub deliver_at: u64,
    pub from: ClientId,
    pub to: ClientId,
    pub envelope: Envelope,
}

/// Schedules `envelope` on `link`. Returns `None` when the link drops it.
pub fn send(clock: &SimClock, link: &mut Link, from: ClientId, to: ClientId, envelope: Envelope) -> Option<SimEvent> {
    let cfg = link.config;
    if cfg.drop_probability > 0.0 && link.rng.random::<f64>() < cfg.drop_probability {
        return None;
    }
    let j = cfg.jitter_ms as i64;
    let jitter = if j > 0 { link.rng.random_range(-j..=j) } else { 0 };
    let raw = (clock.now() + cfg.base_latency_ms) as i64 + jitter;
    let deliver_at = (raw.max(clock.now() as i64) as u64).max(link.last_delivery);
    link.last_delivery = deliver_at;
    Some(SimEvent { deliver_at, from, to, envelope })
}

/// One delivered envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub t_ms: u64,
    pub from: ClientId,
    pub to: ClientId,
    pub envelope: Envelope,
}

pub type Trace = Vec<TraceEntry>;

/// What an endpoint may do while handling an event.
#[derive(Debug)]
pub struct Ctx {
    now: u64,
    me: ClientId,
    outbox: Vec<(ClientId, Envelope)>,
    timers: Vec<(u64, u64)>,
}

impl Ctx {
    pub fn now(&self) -> u64 {
        self.now
    }

    pub fn me(&self) -> &ClientId {
        &self.me
    }

    pub fn send(&mut self, to: ClientId, envelope: Envelope) {
        self.outbox.push((to, envelope));
    }

    /// Fires `on_timer(token)` after `delay_ms`.
    pub fn set_timer(&mut self, delay_ms: u64, token: u64) {
        self.timers.push((delay_ms, token));
    }
}

pub trait Endpoint {
    type Error;

    fn on_start(&mut self, _ctx: &mut Ctx) -> Result<(), Self::Error> {
        Ok(())
    }

    fn on_envelope(&mut self, from: &ClientId, envelope: &Envelope, ctx: &mut Ctx) -> Result<(), Self::Error>;

    fn on_timer(&mut self, _token: u64, _ctx: &mut Ctx) -> Result<(), Self::Error> {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetError<E> {
    #[error("event cap of {cap} exceeded (livelock)")]
    Livelock { cap: usize },
    #[error("no endpoint named {0}")]
    UnknownEndpoint(ClientId),
    #[error("endpoint {endpoint} failed at t={t_ms} ms: {error}")]
    Endpoint { endpoint: ClientId, t_ms: u64, error: E },
}

#[derive(Debug, Clone)]
enum Item {
    Deliver(Box<SimEvent>),
    Timer { owner: ClientId, token: u64 },
}

#[derive(Debug, Clone)]
struct Queued {
    key: (u64, u8, u64, u64, u64),
    item: Item,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}

impl Eq for Queued {}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.cmp(&other.key)
    }
}

/// Latency and jitter applied to a link unless overridden.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkSpec {
    pub base_latency_ms: u64,
    pub jitter_ms: u64,
}

/// Endpoints plus the links and pending events between them.
pub struct World<E: Endpoint> {
    seed: u64,
    clock: SimClock,
    endpoints: BTreeMap<ClientId, E>,
    default_link: LinkSpec,
    overrides: BTreeMap<(ClientId, ClientId), LinkSpec>,
    drop_probability: f64,
    links: BTreeMap<(ClientId, ClientId), Link>,
    queue: BinaryHeap<Reverse<Queued>>,
    ordinal: u64,
    started: bool,
    dropped: u64,
}

impl<E: Endpoint> World<E> {
    pub fn new(seed: u64, default_link: LinkSpec) -> Result<Self, LinkError> {
        LinkConfig::new(default_link.base_latency_ms, default_link.jitter_ms, 0)?;
        Ok(World {
            seed,
            clock: SimClock::default(),
            endpoints: BTreeMap::new(),
            default_link,
            overrides: BTreeMap::new(),
            drop_probability: 0.0,
            links: BTreeMap::new(),
            queue: BinaryHeap::new(),
            ordinal: 0,
            started: false,
            dropped: 0,
        })
    }

    pub fn add_endpoint(&mut self, id: ClientId, endpoint: E) {
        self.endpoints.insert(id, endpoint);
    }

    /// Overrides latency on the directed link `from → to`.
    pub fn set_link(&mut self, from: ClientId, to: ClientId, spec: LinkSpec) -> Result<(), LinkError> {
        LinkConfig::new(spec.base_latency_ms, spec.jitter_ms, 0)?;
        self.links.remove(&(from.clone(), to.clone()));
        self.overrides.insert((from, to), spec);
        Ok(())
    }

    /// Same latency in both directions.
    pub fn set_duplex(&mut self, a: ClientId, b: ClientId, spec: LinkSpec) -> Result<(), LinkError> {
        self.set_link(a.clone(), b.clone(), spec)?;
        self.set_link(b, a, spec)
    }

    pub fn set_drop_probability(&mut self, p: f64) -> Result<(), LinkError> {
        LinkConfig::new(0, 0, 0)?.with_drop_probability(p)?;
        self.drop_probability = p;
        self.links.clear();
        Ok(())
    }

    pub fn endpoint(&self, id: &ClientId) -> Option<&E> {
        self.endpoints.get(id)
    }

    pub fn endpoints(&self) -> impl Iterator<Item = (&ClientId, &E)> {
        self.endpoints.iter()
    }

    pub fn into_endpoints(self) -> BTreeMap<ClientId, E> {
        self.endpoints
    }

    pub fn now(&self) -> u64 {
        self.clock.now()
    }

    pub fn dropped(&self) -> u64 {
        self.dropped
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    fn link_config(&self, from: &ClientId, to: &ClientId) -> LinkConfig {
        let spec = self.overrides.get(&(from.clone(), to.clone())).copied().unwrap_or(self.default_link);
        let mut label = Vec::with_capacity(from.as_str().len() + to.as_str().len() + 1);
        label.extend_from_slice(from.as_str().as_bytes());
        label.push(0);
        label.extend_from_slice(to.as_str().as_bytes());
        LinkConfig {
            base_latency_ms: spec.base_latency_ms,
            jitter_ms: spec.jitter_ms,
            seed: split_seed(self.seed, &label),
            drop_probability: self.drop_probability,
        }
    }

    fn push(&mut self, at: u64, item: Item) {
        let (kind, host_seq, sender_seq) = match &item {
            Item::Deliver(ev) => (0, ev.envelope.host_seq, ev.envelope.sender_seq),
            Item::Timer { .. } => (1, 0, 0),
        };
        let key = (at, kind, host_seq, sender_seq, self.ordinal);
        self.ordinal += 1;
        self.queue.push(Reverse(Queued { key, item }));
    }

    /// Queues an envelope from outside any endpoint, sent at the current time.
    pub fn inject(&mut self, from: ClientId, to: ClientId, envelope: Envelope) {
        let key = (from.clone(), to.clone());
        if !self.links.contains_key(&key) {
            let cfg = self.link_config(&from, &to);
            self.links.insert(key.clone(), Link::new(cfg));
        }
        let link = self.links.get_mut(&key).expect("inserted above");
        match send(&self.clock, link, from, to, envelope) {
            Some(ev) => self.push(ev.deliver_at, Item::Deliver(Box::new(ev))),
            None => self.dropped += 1,
        }
    }

    fn flush(&mut self, ctx: Ctx) {
        let me = ctx.me;
        for (to, envelope) in ctx.outbox {
            self.inject(me.clone(), to, envelope);
        }
        for (delay, token) in ctx.timers {
            let at = self.clock.now() + delay;
            self.push(at, Item::Timer { owner: me.clone(), token });
        }
    }

    fn ctx(&self, me: &ClientId) -> Ctx {
        Ctx { now: self.clock.now(), me: me.clone(), outbox: Vec::new(), timers: Vec::new() }
    }

    fn start(&mut self) -> Result<(), NetError<E::Error>> {
        if self.started {
            return Ok(());
        }
        self.started = true;
        let ids: Vec<ClientId> = self.endpoints.keys().cloned().collect();
        for id in ids {
            let mut ctx = self.ctx(&id);
            let t_ms = self.clock.now();
            let ep = self.endpoints.get_mut(&id).expect("listed above");
            ep.on_start(&mut ctx).map_err(|error| NetError::Endpoint { endpoint: id.clone(), t_ms, error })?;
            self.flush(ctx);
        }
        Ok(())
    }

    /// Processes events until none remain. Fails if more than `cap` events
    /// would be processed.
    pub fn run_until_quiescent(&mut self, cap: usize) -> Result<Trace, NetError<E::Error>> {
        self.start()?;
        let mut trace = Vec::new();
        let mut processed = 0usize;
        while let Some(Reverse(next)) = self.queue.pop() {
            if processed == cap {
                return Err(NetError::Livelock { cap });
            }
            processed += 1;
            self.clock.advance_to(next.key.0);
            let t_ms = self.clock.now();
            match next.item {
                Item::Deliver(ev) => {
                    let mut ctx = self.ctx(&ev.to);
                    let ep = self.endpoints.get_mut(&ev.to).ok_or_else(|| NetError::UnknownEndpoint(ev.to.clone()))?;
                    ep.on_envelope(&ev.from, &ev.envelope, &mut ctx)
                        .map_err(|error| NetError::Endpoint { endpoint: ev.to.clone(), t_ms, error })?;
                    let ev = *ev;
                    trace.push(TraceEntry { t_ms, from: ev.from, to: ev.to, envelope: ev.envelope });
                    self.flush(ctx);
                }
                Item::Timer { owner, token } => {
                    let mut ctx = self.ctx(&owner);
                    let ep = self.endpoints.get_mut(&owner).ok_or_else(|| NetError::UnknownEndpoint(owner.clone()))?;
                    ep.on_timer(token, &mut ctx).map_err(|error| NetError::Endpoint { endpoint: owner, t_ms, error })?;
                    self.flush(ctx);
                }
            }
        }
        Ok(trace)
    }
}

//! Scripted Expert and Operator, plus the host, as endpoints of the
//! simulated network. One call to [`run_session`] plays a full inspection.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use super::log::{Condition, EventKind, LogEvent, SessionLog};
use super::plan::{Block, InspectionPlan, PartKind};
use super::plant::{PlantConfig, PlantState};
use super::profile::{lognormal, ExpertPolicy, OperatorProfile, ProfileSet};
use super::ScenarioError;
use crate::geometry::{Pose, Vec3};
use crate::net::{Ctx, Endpoint, NetError, Trace, World};
use crate::replica::Role;
use crate::rng::{self, SimRng};
use crate::scene::{EditOp, Handedness, NodeId, Rgb, SceneModel, ValveState};
use crate::session::{
    AvatarState, ClientId, ClientSession, Directive, Envelope, ExpertPlacement, Feedback, Payload, Received,
    RoomId, RoomState,
};

pub const HOST_ID: &str = "host";
pub const EXPERT_ID: &str = "expert";
pub const OPERATOR_ID: &str = "operator";
pub const ROOM_ID: &str = "inspection";

/// Events processed before a session is declared stuck.
pub const EVENT_CAP: usize = 200_000;

/// How many nearby valves a mistaken Operator picks from.
const CONFUSABLE_NEIGHBOURS: usize = 3;

fn id(s: &str) -> ClientId {
    ClientId::new(s).expect("static id")
}

/// The installation a session runs against.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionSetup {
    /// Shared model, already anchored to the installation.
    pub model: SceneModel,
    pub plant: PlantConfig,
}

/// Everything a finished session leaves behind.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionRun {
    pub log: SessionLog,
    pub trace: Trace,
    /// Physical valve states at hang-up.
    pub plant: PlantState,
    pub host_shared: SceneModel,
    pub expert_shared: SceneModel,
    pub operator_shared: SceneModel,
}

pub enum Agent {
    Host(Box<RoomState>),
    Expert(Box<ExpertAgent>),
    Operator(Box<OperatorAgent>),
}

impl Endpoint for Agent {
    type Error = ScenarioError;

    fn on_start(&mut self, ctx: &mut Ctx) -> Result<(), ScenarioError> {
        match self {
            Agent::Host(_) => Ok(()),
            Agent::Expert(e) => e.on_start(ctx),
            Agent::Operator(o) => o.on_start(ctx),
        }
    }

    fn on_envelope(&mut self, _from: &ClientId, envelope: &Envelope, ctx: &mut Ctx) -> Result<(), ScenarioError> {
        match self {
            Agent::Host(room) => {
                for out in room.handle(envelope.clone())? {
                    ctx.send(out.to, out.envelope);
                }
                Ok(())
            }
            Agent::Expert(e) => e.on_envelope(envelope, ctx),
            Agent::Operator(o) => o.on_envelope(envelope, ctx),
        }
    }

    fn on_timer(&mut self, token: u64, ctx: &mut Ctx) -> Result<(), ScenarioError> {
        match self {
            Agent::Host(_) => Ok(()),
            Agent::Expert(e) => e.on_timer(token, ctx),
            Agent::Operator(o) => o.on_timer(token, ctx),
        }
    }
}

fn ms(x: f64) -> u64 {
    libm::round(x.max(0.0)) as u64
}

#[derive(Debug, Clone, PartialEq)]
enum ExpertStep {
    OpenBlock,
    Indicate,
    Locate,
    Manipulate,
    Revert(NodeId),
    Prompt,
    AskTemperature,
    Summarize,
}

pub struct ExpertAgent {
    session: ClientSession,
    condition: Condition,
    policy: ExpertPolicy,
    blocks: Vec<Block>,
    /// Index of the last block of the first part.
    part_one_last: usize,
    block: usize,
    op: usize,
    pending: Option<(u64, ExpertStep)>,
    next_token: u64,
    awaiting_commit: bool,
    indicated: Option<NodeId>,
    started: bool,
}

impl ExpertAgent {
    fn new(session: ClientSession, condition: Condition, policy: ExpertPolicy, plan: &InspectionPlan) -> Self {
        let part_one_len =
            plan.parts.iter().find(|p| p.kind == PartKind::InspectSystem).map_or(0, |p| p.blocks.len());
        ExpertAgent {
            session,
            condition,
            policy,
            blocks: plan.blocks().cloned().collect(),
            part_one_last: part_one_len.saturating_sub(1),
            block: 0,
            op: 0,
            pending: None,
            next_token: 0,
            awaiting_commit: false,
            indicated: None,
            started: false,
        }
    }

    fn schedule(&mut self, ctx: &mut Ctx, delay_ms: f64, step: ExpertStep) {
        self.next_token += 1;
        self.pending = Some((self.next_token, step));
        ctx.set_timer(ms(delay_ms), self.next_token);
    }

    fn say(&mut self, ctx: &mut Ctx, directive: Directive) {
        let env = self.session.envelope(Payload::Instruction(directive.into()));
        ctx.send(self.session.host.clone(), env);
    }

    fn current(&self) -> &Block {
        &self.blocks[self.block]
    }

    fn target(&self) -> Option<(&NodeId, ValveState, Handedness)> {
        match self.current() {
            Block::Manipulation { kind, ops, .. } => ops.get(self.op).map(|o| (&o.valve, o.target_state, *kind)),
            Block::NoManipulation { .. } => None,
        }
    }

    fn on_start(&mut self, ctx: &mut Ctx) -> Result<(), ScenarioError> {
        let join = self.session.join();
        ctx.send(self.session.host.clone(), join);
        if self.condition == Condition::Hmd {
            let avatar =
                AvatarState::new(self.session.id.clone(), Role::Expert, Pose::IDENTITY, Vec3::new(0.0, 0.0, 1.0))?;
            let env = self.session.envelope(Payload::Avatar(avatar));
            ctx.send(self.session.host.clone(), env);
        }
        Ok(())
    }

    fn open_block(&mut self, ctx: &mut Ctx) {
        let block = self.current().clone();
        self.op = 0;
        self.say(ctx, Directive::Boundary { block: block.id().into(), kind: block.kind(), open: true });
        match block {
            Block::NoManipulation { .. } => self.schedule(ctx, self.policy.instruct_ms, ExpertStep::Prompt),
            Block::Manipulation { .. } => self.begin_op(ctx),
        }
    }

    fn begin_op(&mut self, ctx: &mut Ctx) {
        match self.condition {
            Condition::Hmd => self.schedule(ctx, self.policy.indication_ms, ExpertStep::Indicate),
            Condition::Tablet => self.schedule(ctx, self.policy.instruct_ms, ExpertStep::Locate),
        }
    }

    fn finish_op(&mut self, ctx: &mut Ctx) {
        self.op += 1;
        if self.target().is_some() {
            self.begin_op(ctx);
        } else {
            self.close_block(ctx);
        }
    }

    fn close_block(&mut self, ctx: &mut Ctx) {
        let block = self.current();
        let directive = Directive::Boundary { block: block.id().into(), kind: block.kind(), open: false };
        self.say(ctx, directive);
        if self.block == self.part_one_last {
            self.schedule(ctx, self.policy.instruct_ms, ExpertStep::AskTemperature);
        } else if self.block + 1 == self.blocks.len() {
            self.schedule(ctx, self.policy.summary_ms, ExpertStep::Summarize);
        } else {
            self.block += 1;
            self.open_block(ctx);
        }
    }

    /// Highlights the next valve and starts its motion indication in the
    /// replica, then shares it.
    fn indicate(&mut self, ctx: &mut Ctx) -> Result<(), ScenarioError> {
        let (valve, _, _) = self.target().ok_or(ScenarioError::Protocol("indication outside an operation"))?;
        let valve = valve.clone();
        let replica = &mut self.session.replica;
        if let Some(prev) = self.indicated.take() {
            replica.edit(EditOp::SetHighlight { node: prev.clone(), color: None })?;
            replica.edit(EditOp::SetIndication { node: prev, on: false })?;
        }
        replica.edit(EditOp::SetHighlight { node: valve.clone(), color: Some(Rgb::YELLOW) })?;
        replica.edit(EditOp::SetIndication { node: valve.clone(), on: true })?;
        self.indicated = Some(valve);
        self.awaiting_commit = true;
        let env = self.session.sync();
        ctx.send(self.session.host.clone(), env);
        Ok(())
    }

    fn on_timer(&mut self, token: u64, ctx: &mut Ctx) -> Result<(), ScenarioError> {
        let step = match self.pending.take() {
            Some((t, step)) if t == token => step,
            other => {
                self.pending = other;
                return Ok(());
            }
        };
        match step {
            ExpertStep::OpenBlock => self.open_block(ctx),
            ExpertStep::Indicate => self.indicate(ctx)?,
            ExpertStep::Locate => {
                let (valve, _, handedness) = self.target().ok_or(ScenarioError::Protocol("locate outside an operation"))?;
                let d = Directive::Locate { valve: valve.clone(), block: self.current().id().into(), handedness };
                self.say(ctx, d);
            }
            ExpertStep::Manipulate => {
                let (valve, state, handedness) =
                    self.target().ok_or(ScenarioError::Protocol("manipulate outside an operation"))?;
                let d = Directive::Manipulate { valve: valve.clone(), state, handedness };
                self.say(ctx, d);
            }
            ExpertStep::Revert(valve) => {
                let (_, _, handedness) = self.target().ok_or(ScenarioError::Protocol("revert outside an operation"))?;
                self.say(ctx, Directive::Revert { valve, handedness });
            }
            ExpertStep::Prompt => {
                let d = match self.current() {
                    Block::NoManipulation { id, prompt } => Directive::Describe { block: id.clone(), prompt: prompt.clone() },
                    Block::Manipulation { .. } => return Err(ScenarioError::Protocol("prompt in a manipulation block")),
                };
                self.say(ctx, d);
            }
            ExpertStep::AskTemperature => self.say(ctx, Directive::ReportTemperature),
            ExpertStep::Summarize => self.say(ctx, Directive::Summarize),
        }
        Ok(())
    }

    fn on_envelope(&mut self, envelope: &Envelope, ctx: &mut Ctx) -> Result<(), ScenarioError> {
        let received = self.session.receive(envelope)?;
        if let Received::Commit { own: true, .. } = received {
            if self.awaiting_commit {
                self.awaiting_commit = false;
                self.schedule(ctx, self.policy.instruct_ms, ExpertStep::Locate);
            }
            return Ok(());
        }
        let i = self.policy.instruct_ms;
        match &envelope.payload {
            // Whoever joined second is seen by the other, who places the call.
            Payload::Join { role: Role::Operator } if !self.started => {
                self.started = true;
                let env = self.session.envelope(Payload::CallStart);
                ctx.send(self.session.host.clone(), env);
                self.schedule(ctx, self.policy.intro_ms, ExpertStep::OpenBlock);
            }
            Payload::CallStart if !self.started => {
                self.started = true;
                self.schedule(ctx, self.policy.intro_ms, ExpertStep::OpenBlock);
            }
            Payload::Feedback(fb) => match fb {
                Feedback::RepeatRequest => self.schedule(ctx, i, ExpertStep::Locate),
                Feedback::Identified { valve } => {
                    let right = self.target().is_some_and(|(t, _, _)| t == valve);
                    if right {
                        self.schedule(ctx, self.policy.confirm_ms, ExpertStep::Manipulate);
                    } else {
                        self.schedule(ctx, i, ExpertStep::Locate);
                    }
                }
                Feedback::Manipulated { valve } => {
                    let right = self.target().is_some_and(|(t, _, _)| t == valve);
                    if right {
                        self.finish_op(ctx);
                    } else {
                        self.schedule(ctx, i, ExpertStep::Revert(valve.clone()));
                    }
                }
                Feedback::Reverted { .. } => self.schedule(ctx, i, ExpertStep::Manipulate),
                Feedback::Described { .. } => self.close_block(ctx),
                Feedback::Temperature { .. } => {
                    self.block += 1;
                    self.schedule(ctx, self.policy.explain_ms, ExpertStep::OpenBlock);
                }
            },
            _ => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum OperatorStep {
    Repeat(NodeId),
    Identify(NodeId),
    Manipulate { target: NodeId, state: ValveState },
    Revert(NodeId),
    Describe(String),
    Report,
    EndCall,
}

pub struct OperatorAgent {
    session: ClientSession,
    condition: Condition,
    profile: OperatorProfile,
    plant: PlantState,
    plant_config: PlantConfig,
    rng: SimRng,
    /// Per-session factor on every latency.
    pace: f64,
    /// World positions of the valves, for picking confusable neighbours.
    valve_positions: BTreeMap<NodeId, Vec3>,
    events: Vec<LogEvent>,
    block: Option<String>,
    started: bool,
    /// Valve the last manipulate instruction asked for.
    manipulate_target: Option<NodeId>,
    pending: BTreeMap<u64, OperatorStep>,
    next_token: u64,
}

impl OperatorAgent {
    fn log(&mut self, t_ms: u64, kind: EventKind) {
        self.events.push(LogEvent { t_ms, block: self.block.clone(), kind });
    }

    fn schedule(&mut self, ctx: &mut Ctx, delay_ms: f64, step: OperatorStep) {
        self.next_token += 1;
        self.pending.insert(self.next_token, step);
        ctx.set_timer(ms(delay_ms), self.next_token);
    }

    fn send(&mut self, ctx: &mut Ctx, payload: Payload) {
        let env = self.session.envelope(payload);
        ctx.send(self.session.host.clone(), env);
    }

    /// One of the valves closest to `target`.
    fn confusable(&mut self, target: &NodeId) -> NodeId {
        let at = self.valve_positions[target];
        let mut others: Vec<(f64, &NodeId)> = self
            .valve_positions
            .iter()
            .filter(|(id, _)| *id != target)
            .map(|(id, p)| ((*p - at).norm(), id))
            .collect();
        others.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));
        let k = others.len().min(CONFUSABLE_NEIGHBOURS);
        let pick = self.rng.random_range(0..k);
        others[pick].1.clone()
    }

    fn manipulation_ms(&mut self, handedness: Handedness) -> f64 {
        let put = self.profile.putdown_ms(self.condition, handedness) * self.pace;
        put + self.profile.manipulate_latency(handedness).sample(self.pace, &mut self.rng)
    }

    /// Looks at the valve from about an arm's length away.
    fn avatar_near(&self, valve: &NodeId) -> Result<AvatarState, ScenarioError> {
        let at = self.valve_positions[valve];
        let head = at + Vec3::new(0.0, 0.3, 0.7);
        Ok(AvatarState::new(self.session.id.clone(), Role::Operator, Pose::at(head), at - head)?)
    }

    fn on_start(&mut self, ctx: &mut Ctx) -> Result<(), ScenarioError> {
        let join = self.session.join();
        ctx.send(self.session.host.clone(), join);
        Ok(())
    }

    fn on_instruction(&mut self, directive: &Directive, text: &str, ctx: &mut Ctx) -> Result<(), ScenarioError> {
        let now = ctx.now();
        if let Directive::Boundary { block, open: true, .. } = directive {
            self.block = Some(block.clone());
        }
        self.log(now, EventKind::Instruction { text: text.into(), directive: directive.clone() });
        match directive {
            Directive::Boundary { block, kind, open } => {
                self.log(now, EventKind::Breakpoint { block: block.clone(), block_kind: *kind, open: *open });
                if !open {
                    self.block = None;
                }
            }
            Directive::Locate { valve, .. } => {
                if !self.valve_positions.contains_key(valve) {
                    return Err(ScenarioError::Protocol("instruction names an unknown valve"));
                }
                if self.condition == Condition::Hmd {
                    let avatar = self.avatar_near(valve)?;
                    self.send(ctx, Payload::Avatar(avatar));
                }
                if self.rng.random_bool(self.profile.p_repeat) {
                    let d = self.profile.repeat_latency.sample(self.pace, &mut self.rng);
                    self.schedule(ctx, d, OperatorStep::Repeat(valve.clone()));
                } else {
                    let d = self.profile.identify_latency.sample(self.pace, &mut self.rng);
                    self.schedule(ctx, d, OperatorStep::Identify(valve.clone()));
                }
            }
            Directive::Manipulate { valve, state, handedness } => {
                self.manipulate_target = Some(valve.clone());
                let d = self.manipulation_ms(*handedness);
                self.schedule(ctx, d, OperatorStep::Manipulate { target: valve.clone(), state: *state });
            }
            Directive::Revert { valve, handedness } => {
                let d = self.manipulation_ms(*handedness);
                self.schedule(ctx, d, OperatorStep::Revert(valve.clone()));
            }
            Directive::Describe { block, .. } => {
                let d = self.profile.describe_latency.sample(self.pace, &mut self.rng);
                self.schedule(ctx, d, OperatorStep::Describe(block.clone()));
            }
            Directive::ReportTemperature => {
                let d = self.profile.report_latency.sample(self.pace, &mut self.rng);
                self.schedule(ctx, d, OperatorStep::Report);
            }
            Directive::Summarize => {
                let d = self.profile.end_call_latency.sample(self.pace, &mut self.rng);
                self.schedule(ctx, d, OperatorStep::EndCall);
            }
        }
        Ok(())
    }

    fn on_envelope(&mut self, envelope: &Envelope, ctx: &mut Ctx) -> Result<(), ScenarioError> {
        let received = self.session.receive(envelope)?;
        let now = ctx.now();
        match &envelope.payload {
            Payload::Join { role: Role::Expert } if !self.started => {
                self.started = true;
                self.log(now, EventKind::CallStart);
                self.send(ctx, Payload::CallStart);
            }
            Payload::CallStart if !self.started => {
                self.started = true;
                self.log(now, EventKind::CallStart);
            }
            Payload::SyncCommit(commit) => {
                if let Received::Commit { new_version, .. } = received {
                    self.log(now, EventKind::SyncCommit { new_version });
                }
                for edit in &commit.accepted {
                    if let EditOp::SetIndication { node, on: true } = &edit.op {
                        self.log(now, EventKind::ReplicaIndication { valve: node.clone() });
                    }
                }
            }
            Payload::Instruction(ins) => self.on_instruction(&ins.directive, &ins.text, ctx)?,
            _ => {}
        }
        Ok(())
    }

    fn on_timer(&mut self, token: u64, ctx: &mut Ctx) -> Result<(), ScenarioError> {
        let Some(step) = self.pending.remove(&token) else {
            return Ok(());
        };
        let now = ctx.now();
        match step {
            OperatorStep::Repeat(target) => {
                self.log(now, EventKind::RepeatRequest { target });
                self.send(ctx, Payload::Feedback(Feedback::RepeatRequest));
            }
            OperatorStep::Identify(target) => {
                let valve =
                    if self.rng.random_bool(self.profile.p_simple) { self.confusable(&target) } else { target.clone() };
                let correct = valve == target;
                self.log(now, EventKind::Identify { valve: valve.clone(), target, correct });
                self.send(ctx, Payload::Feedback(Feedback::Identified { valve }));
            }
            OperatorStep::Manipulate { target, state } => {
                let (valve, new_state) = if self.rng.random_bool(self.profile.p_critical) {
                    let wrong = self.confusable(&target);
                    self.plant.toggle(&wrong);
                    let s = self.plant.valve_states[&wrong];
                    (wrong, s)
                } else {
                    self.plant.valve_states.insert(target.clone(), state);
                    (target.clone(), state)
                };
                let correct = valve == target;
                self.log(now, EventKind::Manipulate { valve: valve.clone(), target, state: new_state, correct });
                self.send(ctx, Payload::Feedback(Feedback::Manipulated { valve }));
            }
            OperatorStep::Revert(valve) => {
                self.plant.toggle(&valve);
                let target = self.manipulate_target.clone().unwrap_or_else(|| valve.clone());
                self.log(now, EventKind::Revert { valve: valve.clone(), target });
                self.send(ctx, Payload::Feedback(Feedback::Reverted { valve }));
            }
            OperatorStep::Describe(block) => self.send(ctx, Payload::Feedback(Feedback::Described { block })),
            OperatorStep::Report => {
                let celsius = self.plant.hot_outlet_c(&self.plant_config)?;
                self.log(now, EventKind::TemperatureReport { celsius });
                self.send(ctx, Payload::Feedback(Feedback::Temperature { celsius }));
            }
            OperatorStep::EndCall => {
                self.log(now, EventKind::CallEnd);
                self.send(ctx, Payload::CallEnd);
            }
        }
        Ok(())
    }
}

/// Network seed derived from a session seed.
pub fn network_seed(seed: u64) -> u64 {
    rng::split_seed(seed, b"net")
}

fn build_world(
    setup: &SessionSetup,
    plan: &InspectionPlan,
    condition: Condition,
    profiles: &ProfileSet,
    seed: u64,
) -> Result<World<Agent>, ScenarioError> {
    profiles.validate()?;
    setup.plant.validate()?;
    let (host, expert, operator) = (id(HOST_ID), id(EXPERT_ID), id(OPERATOR_ID));
    let room_id = RoomId::new(ROOM_ID)?;
    let placement = ExpertPlacement { elevation: profiles.expert.avatar_elevation_m, horizontal_offset: [0.0, 0.0] };
    let room = RoomState::new(room_id.clone(), host.clone(), setup.model.clone()).with_placement(placement);
    let scale = profiles.expert.replica_scale;
    let expert_session =
        ClientSession::new(expert.clone(), Role::Expert, room_id.clone(), host.clone(), setup.model.clone(), scale)?;
    let operator_session =
        ClientSession::new(operator.clone(), Role::Operator, room_id, host.clone(), setup.model.clone(), scale)?;

    let profile = *profiles.operator(condition);
    let mut rng = rng::stream(seed, b"operator");
    let pace = lognormal(1.0, profile.pace_cv, &mut rng);
    let valve_positions = setup
        .model
        .valves()
        .filter_map(|v| setup.model.world_pose(&v.id).map(|p| (v.id.clone(), p.position)))
        .collect();
    let operator_agent = OperatorAgent {
        session: operator_session,
        condition,
        profile,
        plant: PlantState::from_model(&setup.model, &setup.plant),
        plant_config: setup.plant.clone(),
        rng,
        pace,
        valve_positions,
        events: Vec::new(),
        block: None,
        started: false,
        manipulate_target: None,
        pending: BTreeMap::new(),
        next_token: 0,
    };

    let mut world = World::new(network_seed(seed), profiles.network.operator_link)?;
    world.set_duplex(expert.clone(), host.clone(), profiles.network.expert_link)?;
    world.set_duplex(operator.clone(), host.clone(), profiles.network.operator_link)?;
    world.add_endpoint(host, Agent::Host(Box::new(room)));
    world.add_endpoint(expert, Agent::Expert(Box::new(ExpertAgent::new(expert_session, condition, profiles.expert, plan))));
    world.add_endpoint(operator, Agent::Operator(Box::new(operator_agent)));
    Ok(world)
}

/// Plays one complete session and returns its log and network trace.
pub fn run_session(
    setup: &SessionSetup,
    plan: &InspectionPlan,
    condition: Condition,
    profiles: &ProfileSet,
    seed: u64,
) -> Result<SessionRun, ScenarioError> {
    plan.validate(&super::plan::registry(&setup.model))?;
    let mut world = build_world(setup, plan, condition, profiles, seed)?;
    let trace = world.run_until_quiescent(EVENT_CAP).map_err(|e| match e {
        NetError::Livelock { cap } => ScenarioError::Livelock(cap),
        NetError::UnknownEndpoint(_) => ScenarioError::Protocol("message to an unknown endpoint"),
        NetError::Endpoint { error, .. } => error,
    })?;
    let mut endpoints = world.into_endpoints();
    let take = |a: Option<Agent>| a.ok_or(ScenarioError::Protocol("endpoint missing after run"));
    let (Agent::Host(host), Agent::Expert(expert), Agent::Operator(operator)) = (
        take(endpoints.remove(&id(HOST_ID)))?,
        take(endpoints.remove(&id(EXPERT_ID)))?,
        take(endpoints.remove(&id(OPERATOR_ID)))?,
    ) else {
        return Err(ScenarioError::Protocol("endpoint roles swapped"));
    };
    let log = SessionLog { condition, seed, events: operator.events };
    log.check().map_err(ScenarioError::Incomplete)?;
    Ok(SessionRun {
        log,
        trace,
        plant: operator.plant,
        host_shared: host.shared,
        expert_shared: expert.session.shared,
        operator_shared: operator.session.shared,
    })
}

//! Behaviour parameters of the scripted agents, and their calibration from
//! published group statistics.
//!
//! The expected duration of a session is a closed-form function of the
//! parameters (see [`expected_times`]), so calibration solves for the free
//! latencies directly instead of searching by simulation:
//!
//! - error probabilities from the per-session error counts,
//! - identification latency from the one-handed block time,
//! - two-handed manipulation latency (and the tablet put-down penalty) from
//!   the two-handed block time,
//! - description latency from the total session time,
//! - the per-session pace spread from the total-time standard deviation.

use rand::Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::log::Condition;
use crate::net::LinkSpec;
use crate::scene::Handedness;

/// Positive latency, drawn from a log-normal with this mean and SD.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Latency {
    pub mean_ms: f64,
    pub sd_ms: f64,
}

impl Latency {
    pub const fn fixed(ms: f64) -> Self {
        Latency { mean_ms: ms, sd_ms: 0.0 }
    }

    pub fn with_cv(mean_ms: f64, cv: f64) -> Self {
        Latency { mean_ms, sd_ms: mean_ms * cv }
    }

    /// One draw in milliseconds, scaled by `pace`.
    pub fn sample<R: Rng + ?Sized>(&self, pace: f64, rng: &mut R) -> f64 {
        pace * lognormal(self.mean_ms, self.sd_ms / self.mean_ms, rng)
    }

    fn valid(&self) -> bool {
        self.mean_ms.is_finite() && self.sd_ms.is_finite() && self.mean_ms > 0.0 && self.sd_ms >= 0.0
    }

    fn var(&self) -> f64 {
        self.sd_ms * self.sd_ms
    }
}

/// Log-normal draw with the given mean and coefficient of variation.
pub fn lognormal<R: Rng + ?Sized>(mean: f64, cv: f64, rng: &mut R) -> f64 {
    if cv <= 0.0 {
        return mean;
    }
    let sigma2 = libm::log1p(cv * cv);
    let mu = libm::log(mean) - sigma2 / 2.0;
    LogNormal::new(mu, libm::sqrt(sigma2)).expect("finite parameters").sample(rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorProfile {
    /// Probability that an identification attempt picks a wrong valve.
    pub p_simple: f64,
    /// Probability that a manipulation attempt acts on a wrong valve.
    pub p_critical: f64,
    /// Probability of asking for a location instruction to be repeated.
    pub p_repeat: f64,
    pub identify_latency: Latency,
    pub manipulate_latency_1h: Latency,
    pub manipulate_latency_2h: Latency,
    /// Added to every two-handed manipulation in the tablet condition.
    pub tablet_putdown_penalty_ms: f64,
    /// Time to ask for a repetition.
    pub repeat_latency: Latency,
    /// Time to answer a no-manipulation prompt.
    pub describe_latency: Latency,
    /// Time to read and report the outlet temperature.
    pub report_latency: Latency,
    /// Time between the Expert's summary and hanging up.
    pub end_call_latency: Latency,
    /// Coefficient of variation of a per-session factor scaling every
    /// Operator latency (mean 1, log-normal).
    pub pace_cv: f64,
}

impl OperatorProfile {
    pub fn validate(&self) -> Result<(), ProfileError> {
        for (name, p) in [("p_simple", self.p_simple), ("p_critical", self.p_critical), ("p_repeat", self.p_repeat)] {
            // A probability of exactly 1 would never terminate.
            if !(0.0..1.0).contains(&p) {
                return Err(ProfileError::Probability(name));
            }
        }
        let latencies = [
            ("identify_latency", self.identify_latency),
            ("manipulate_latency_1h", self.manipulate_latency_1h),
            ("manipulate_latency_2h", self.manipulate_latency_2h),
            ("repeat_latency", self.repeat_latency),
            ("describe_latency", self.describe_latency),
            ("report_latency", self.report_latency),
            ("end_call_latency", self.end_call_latency),
        ];
        for (name, l) in latencies {
            if !l.valid() {
                return Err(ProfileError::Latency(name));
            }
        }
        if !(self.tablet_putdown_penalty_ms.is_finite() && self.tablet_putdown_penalty_ms >= 0.0) {
            return Err(ProfileError::Latency("tablet_putdown_penalty_ms"));
        }
        if !(self.pace_cv.is_finite() && self.pace_cv >= 0.0) {
            return Err(ProfileError::Latency("pace_cv"));
        }
        Ok(())
    }

    pub fn manipulate_latency(&self, h: Handedness) -> Latency {
        match h {
            Handedness::OneHanded => self.manipulate_latency_1h,
            Handedness::TwoHanded => self.manipulate_latency_2h,
        }
    }

    pub fn putdown_ms(&self, condition: Condition, h: Handedness) -> f64 {
        match (condition, h) {
            (Condition::Tablet, Handedness::TwoHanded) => self.tablet_putdown_penalty_ms,
            _ => 0.0,
        }
    }
}

/// Speaking and preparation times of the single scripted Expert. The Expert
/// is deterministic: these are fixed durations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpertPolicy {
    /// Speaking a location, correction, revert or prompt instruction.
    pub instruct_ms: f64,
    /// Confirming an identification and asking for the manipulation.
    pub confirm_ms: f64,
    /// Editing the replica before a sync (HMD only).
    pub indication_ms: f64,
    pub intro_ms: f64,
    /// Explaining the temperature issue between the two parts.
    pub explain_ms: f64,
    pub summary_ms: f64,
    pub replica_scale: f64,
    pub avatar_elevation_m: f64,
}

impl ExpertPolicy {
    pub fn validate(&self) -> Result<(), ProfileError> {
        let fields = [
            ("instruct_ms", self.instruct_ms),
            ("confirm_ms", self.confirm_ms),
            ("indication_ms", self.indication_ms),
            ("intro_ms", self.intro_ms),
            ("explain_ms", self.explain_ms),
            ("summary_ms", self.summary_ms),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ProfileError::Latency(name));
            }
        }
        if !(self.replica_scale.is_finite() && self.replica_scale > 0.0) {
            return Err(ProfileError::Latency("replica_scale"));
        }
        if !(self.avatar_elevation_m.is_finite() && self.avatar_elevation_m > 0.0) {
            return Err(ProfileError::Latency("avatar_elevation_m"));
        }
        Ok(())
    }
}

impl Default for ExpertPolicy {
    fn default() -> Self {
        ExpertPolicy {
            instruct_ms: 6_000.0,
            confirm_ms: 2_000.0,
            indication_ms: 3_000.0,
            intro_ms: 60_000.0,
            explain_ms: 90_000.0,
            summary_ms: 60_000.0,
            replica_scale: crate::replica::DEFAULT_SCALE,
            avatar_elevation_m: 1.5,
        }
    }
}

/// The Expert sits next to the host; the Operator is on a remote link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkProfile {
    pub expert_link: LinkSpec,
    pub operator_link: LinkSpec,
}

impl NetworkProfile {
    /// Mean one-way Expert ↔ Operator delay through the host.
    pub fn hop_ms(&self) -> f64 {
        (self.expert_link.base_latency_ms + self.operator_link.base_latency_ms) as f64
    }
}

impl Default for NetworkProfile {
    fn default() -> Self {
        NetworkProfile {
            expert_link: LinkSpec { base_latency_ms: 1, jitter_ms: 0 },
            operator_link: LinkSpec { base_latency_ms: 40, jitter_ms: 10 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSet {
    pub tablet: OperatorProfile,
    pub hmd: OperatorProfile,
    pub expert: ExpertPolicy,
    pub network: NetworkProfile,
}

impl ProfileSet {
    pub fn operator(&self, condition: Condition) -> &OperatorProfile {
        match condition {
            Condition::Tablet => &self.tablet,
            Condition::Hmd => &self.hmd,
        }
    }

    pub fn validate(&self) -> Result<(), ProfileError> {
        self.tablet.validate()?;
        self.hmd.validate()?;
        self.expert.validate()
    }

    /// Both conditions share one Operator profile and the condition-specific
    /// costs (tablet put-down, replica editing) are removed, so any measured
    /// difference between groups is noise.
    pub fn null(&self, shared: OperatorProfile) -> ProfileSet {
        let op = OperatorProfile { tablet_putdown_penalty_ms: 0.0, ..shared };
        ProfileSet { tablet: op, hmd: op, expert: ExpertPolicy { indication_ms: 0.0, ..self.expert }, network: self.network }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfileError {
    #[error("{0} must be in [0, 1)")]
    Probability(&'static str),
    #[error("{0} must be finite and positive")]
    Latency(&'static str),
    #[error("calibration needs a non-positive {0}; targets are unreachable with these fixed parameters")]
    Infeasible(&'static str),
}

/// Number of blocks and operations per session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanShape {
    pub one_handed_ops: usize,
    pub two_handed_ops: usize,
    pub no_manipulation_blocks: usize,
}

impl PlanShape {
    pub fn of(plan: &super::plan::InspectionPlan) -> Self {
        let mut s = PlanShape { one_handed_ops: 0, two_handed_ops: 0, no_manipulation_blocks: 0 };
        for b in plan.blocks() {
            match b {
                super::plan::Block::Manipulation { kind: Handedness::OneHanded, ops, .. } => s.one_handed_ops += ops.len(),
                super::plan::Block::Manipulation { kind: Handedness::TwoHanded, ops, .. } => s.two_handed_ops += ops.len(),
                super::plan::Block::NoManipulation { .. } => s.no_manipulation_blocks += 1,
            }
        }
        s
    }

    pub fn ops(&self) -> usize {
        self.one_handed_ops + self.two_handed_ops
    }
}

/// Expected durations in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectedTimes {
    pub one_handed_op_ms: f64,
    pub two_handed_op_ms: f64,
    pub no_manipulation_block_ms: f64,
    pub total_ms: f64,
    /// Rough standard deviation of the total.
    pub total_sd_ms: f64,
}

struct Geometric {
    mean_attempts: f64,
    var_attempts: f64,
}

/// Attempts until the first success when each attempt fails with `p`.
fn attempts(p: f64) -> Geometric {
    Geometric { mean_attempts: 1.0 / (1.0 - p), var_attempts: p / ((1.0 - p) * (1.0 - p)) }
}

struct OpMoments {
    mean: f64,
    operator_mean: f64,
    var: f64,
}

fn op_moments(
    op: &OperatorProfile,
    ex: &ExpertPolicy,
    net: &NetworkProfile,
    condition: Condition,
    h: Handedness,
) -> OpMoments {
    let hop2 = 2.0 * net.hop_ms();
    let i = ex.instruct_ms;
    let sync = match condition {
        Condition::Hmd => ex.indication_ms + 2.0 * net.expert_link.base_latency_ms as f64,
        Condition::Tablet => 0.0,
    };
    let k = attempts(op.p_simple);
    let a = attempts(op.p_critical);
    let repeats = op.p_repeat / (1.0 - op.p_repeat);
    let put = op.putdown_ms(condition, h);
    let m = op.manipulate_latency(h);
    let ident = op.identify_latency.mean_ms;
    let q = op.repeat_latency.mean_ms;

    let identify_cost = i + ident + hop2 + repeats * (q + i + hop2);
    let attempt_cost = put + m.mean_ms + hop2;
    let wrong = a.mean_attempts - 1.0;
    let mean = sync
        + k.mean_attempts * identify_cost
        + ex.confirm_ms
        + wrong * i
        + a.mean_attempts * attempt_cost
        + wrong * (i + put + m.mean_ms + hop2);
    let operator_mean = k.mean_attempts * (ident + repeats * q) + (a.mean_attempts + wrong) * (put + m.mean_ms);
    let retry_cost = 2.0 * i + 2.0 * attempt_cost;
    let var = k.mean_attempts * op.identify_latency.var()
        + k.var_attempts * identify_cost * identify_cost
        + (a.mean_attempts + wrong) * m.var()
        + a.var_attempts * retry_cost * retry_cost;
    OpMoments { mean, operator_mean, var }
}

/// Closed-form expected durations for a profile under `condition`.
pub fn expected_times(
    op: &OperatorProfile,
    ex: &ExpertPolicy,
    net: &NetworkProfile,
    condition: Condition,
    shape: PlanShape,
) -> ExpectedTimes {
    let one = op_moments(op, ex, net, condition, Handedness::OneHanded);
    let two = op_moments(op, ex, net, condition, Handedness::TwoHanded);
    let hop = net.hop_ms();
    let nm = ex.instruct_ms + op.describe_latency.mean_ms + 2.0 * hop;
    let n1 = shape.one_handed_ops as f64;
    let n2 = shape.two_handed_ops as f64;
    let nn = shape.no_manipulation_blocks as f64;
    let blocks = n1 * one.mean + n2 * two.mean + nn * nm;
    let total = blocks
        + ex.intro_ms
        + ex.explain_ms
        + ex.summary_ms
        + ex.instruct_ms
        + op.report_latency.mean_ms
        + op.end_call_latency.mean_ms
        + 2.0 * hop;

    let operator_mean = n1 * one.operator_mean
        + n2 * two.operator_mean
        + nn * op.describe_latency.mean_ms
        + op.report_latency.mean_ms
        + op.end_call_latency.mean_ms;
    let within = n1 * one.var
        + n2 * two.var
        + nn * op.describe_latency.var()
        + op.report_latency.var()
        + op.end_call_latency.var();
    let cv2 = op.pace_cv * op.pace_cv;
    let var = (1.0 + cv2) * within + cv2 * operator_mean * operator_mean;
    ExpectedTimes {
        one_handed_op_ms: one.mean,
        two_handed_op_ms: two.mean,
        no_manipulation_block_ms: nm,
        total_ms: total,
        total_sd_ms: libm::sqrt(var),
    }
}

/// Group statistics a profile is calibrated to. Times are per session.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTarget {
    pub total_mean_s: f64,
    pub total_sd_s: f64,
    /// Summed over all one-handed blocks.
    pub one_handed_s: f64,
    /// Summed over all two-handed blocks.
    pub two_handed_s: f64,
    pub simple_per_session: f64,
    pub critical_per_session: f64,
    pub repetition_per_session: f64,
}

/// Parameters held fixed during calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationInputs {
    pub expert: ExpertPolicy,
    pub network: NetworkProfile,
    pub manipulate_1h: Latency,
    pub repeat: Latency,
    pub report: Latency,
    pub end_call: Latency,
    /// Coefficient of variation applied to the solved latencies.
    pub identify_cv: f64,
    pub manipulate_2h_cv: f64,
    pub describe_cv: f64,
}

impl Default for CalibrationInputs {
    fn default() -> Self {
        CalibrationInputs {
            expert: ExpertPolicy::default(),
            network: NetworkProfile::default(),
            manipulate_1h: Latency::with_cv(4_000.0, 0.3),
            repeat: Latency::with_cv(2_000.0, 0.3),
            report: Latency::with_cv(5_000.0, 0.3),
            end_call: Latency::with_cv(3_000.0, 0.3),
            identify_cv: 0.4,
            manipulate_2h_cv: 0.3,
            describe_cv: 0.3,
        }
    }
}

/// Failure probability `p` with `p / (1 − p) = failures_per_success`.
fn failure_probability(failures_per_success: f64) -> f64 {
    failures_per_success / (1.0 + failures_per_success)
}

fn solve_linear(name: &'static str, f: impl Fn(f64) -> f64, target: f64) -> Result<f64, ProfileError> {
    // Every calibrated time is affine in the unknown.
    let f0 = f(0.0);
    let slope = f(1_000.0) - f0;
    let x = (target - f0) / slope * 1_000.0;
    if !(x.is_finite() && x > 0.0) {
        return Err(ProfileError::Infeasible(name));
    }
    Ok(x)
}

fn solve_profile(
    target: &CalibrationTarget,
    inputs: &CalibrationInputs,
    condition: Condition,
    shape: PlanShape,
    shared_2h: Option<f64>,
) -> Result<OperatorProfile, ProfileError> {
    let ops = shape.ops() as f64;
    let p_simple = failure_probability(target.simple_per_session / ops);
    let p_critical = failure_probability(target.critical_per_session / ops);
    let mean_identify_attempts = 1.0 / (1.0 - p_simple);
    let p_repeat = failure_probability(target.repetition_per_session / ops / mean_identify_attempts);
    let ex = &inputs.expert;
    let net = &inputs.network;

    let mut profile = OperatorProfile {
        p_simple,
        p_critical,
        p_repeat,
        identify_latency: Latency::with_cv(1.0, inputs.identify_cv),
        manipulate_latency_1h: inputs.manipulate_1h,
        manipulate_latency_2h: Latency::with_cv(1.0, inputs.manipulate_2h_cv),
        tablet_putdown_penalty_ms: 0.0,
        repeat_latency: inputs.repeat,
        describe_latency: Latency::with_cv(1.0, inputs.describe_cv),
        report_latency: inputs.report,
        end_call_latency: inputs.end_call,
        pace_cv: 0.0,
    };
    let times = |p: &OperatorProfile| expected_times(p, ex, net, condition, shape);

    let per_op_1h = target.one_handed_s * 1_000.0 / shape.one_handed_ops as f64;
    let ident = solve_linear(
        "identify_latency",
        |x| times(&OperatorProfile { identify_latency: Latency::with_cv(x, inputs.identify_cv), ..profile }).one_handed_op_ms,
        per_op_1h,
    )?;
    profile.identify_latency = Latency::with_cv(ident, inputs.identify_cv);

    let per_op_2h = target.two_handed_s * 1_000.0 / shape.two_handed_ops as f64;
    let with_2h = |p: &OperatorProfile, m2: f64| OperatorProfile {
        manipulate_latency_2h: Latency::with_cv(m2, inputs.manipulate_2h_cv),
        ..*p
    };
    let solve_m2 = |p: &OperatorProfile| {
        solve_linear("manipulate_latency_2h", |x| times(&with_2h(p, x)).two_handed_op_ms, per_op_2h)
    };
    match (condition, shared_2h) {
        (Condition::Tablet, Some(m2)) => {
            // Attribute the two-handed slowdown to putting the tablet down,
            // falling back to a slower manipulation if there is none.
            profile = with_2h(&profile, m2);
            let put = (per_op_2h - times(&profile).two_handed_op_ms)
                / (times(&OperatorProfile { tablet_putdown_penalty_ms: 1_000.0, ..profile }).two_handed_op_ms
                    - times(&profile).two_handed_op_ms)
                * 1_000.0;
            if put > 0.0 {
                profile.tablet_putdown_penalty_ms = put;
            } else {
                profile = with_2h(&profile, solve_m2(&profile)?);
            }
        }
        _ => profile = with_2h(&profile, solve_m2(&profile)?),
    }

    let d = solve_linear(
        "describe_latency",
        |x| times(&OperatorProfile { describe_latency: Latency::with_cv(x, inputs.describe_cv), ..profile }).total_ms,
        target.total_mean_s * 1_000.0,
    )?;
    profile.describe_latency = Latency::with_cv(d, inputs.describe_cv);

    // Solve (1 + c²)·W + c²·E² = σ² for the pace spread c.
    let base = times(&profile);
    let within = base.total_sd_ms * base.total_sd_ms;
    let probe = times(&OperatorProfile { pace_cv: 1.0, ..profile }).total_sd_ms;
    let e2 = probe * probe - 2.0 * within;
    let sd = target.total_sd_s * 1_000.0;
    let c2 = ((sd * sd - within) / (within + e2)).max(0.0);
    profile.pace_cv = libm::sqrt(c2);
    profile.validate()?;
    Ok(profile)
}

/// Profiles whose expected block and session times and error counts match
/// the targets.
pub fn calibrate(
    tablet: &CalibrationTarget,
    hmd: &CalibrationTarget,
    inputs: &CalibrationInputs,
    shape: PlanShape,
) -> Result<ProfileSet, ProfileError> {
    inputs.expert.validate()?;
    let hmd_profile = solve_profile(hmd, inputs, Condition::Hmd, shape, None)?;
    let tablet_profile = solve_profile(
        tablet,
        inputs,
        Condition::Tablet,
        shape,
        Some(hmd_profile.manipulate_latency_2h.mean_ms),
    )?;
    Ok(ProfileSet { tablet: tablet_profile, hmd: hmd_profile, expert: inputs.expert, network: inputs.network })
}

//! Group statistics reported for the original user study, and the
//! arithmetic consistency checks that can be run on them.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::metrics::{percent_improvement, weighted_total, ErrorCounts};
use crate::scenario::log::Condition;
use crate::scenario::profile::CalibrationTarget;
use crate::stats::{anova_oneway_summary, GroupSummary};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean_s: f64,
    pub sd_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupFigures {
    pub participants: usize,
    pub total: Moments,
    /// Time in one-handed blocks, summed per participant.
    pub one_handed: Moments,
    pub two_handed: Moments,
    /// Summed over all participants.
    pub errors: ErrorCounts,
    /// Weighted error total as printed.
    pub weighted_errors: u64,
    /// Raw error total as printed.
    pub raw_errors: u64,
    /// Per-participant weighted average as given in the running text.
    pub average_weighted_errors: f64,
}

/// Reductions of the HMD group relative to the tablet group, in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Improvements {
    pub total_time_pct: f64,
    pub one_handed_time_pct: f64,
    pub two_handed_time_pct: f64,
    pub weighted_errors_pct: f64,
    pub simple_errors_pct: f64,
    pub critical_errors_pct: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PublishedFigures {
    pub tablet: GroupFigures,
    pub hmd: GroupFigures,
    /// One-way ANOVA on total time.
    pub total_time_f: f64,
    pub total_time_df: (u32, u32),
    /// The reported p-value is below this bound.
    pub total_time_p_below: f64,
    pub improvements: Improvements,
}

impl Default for PublishedFigures {
    fn default() -> Self {
        PublishedFigures {
            tablet: GroupFigures {
                participants: 19,
                total: Moments { mean_s: 763.65, sd_s: 76.80 },
                one_handed: Moments { mean_s: 193.26, sd_s: 55.8 },
                two_handed: Moments { mean_s: 146.7, sd_s: 36.1 },
                errors: ErrorCounts::new(49, 6, 3),
                weighted_errors: 64,
                raw_errors: 58,
                average_weighted_errors: 3.37,
            },
            hmd: GroupFigures {
                participants: 20,
                total: Moments { mean_s: 623.55, sd_s: 67.70 },
                one_handed: Moments { mean_s: 146.43, sd_s: 26.4 },
                two_handed: Moments { mean_s: 105.86, sd_s: 28.4 },
                errors: ErrorCounts::new(3, 1, 0),
                weighted_errors: 5,
                raw_errors: 4,
                average_weighted_errors: 0.25,
            },
            total_time_f: 36.6,
            total_time_df: (1, 37),
            total_time_p_below: 1e-6,
            improvements: Improvements {
                total_time_pct: 18.35,
                one_handed_time_pct: 24.24,
                two_handed_time_pct: 27.84,
                weighted_errors_pct: 92.58,
                simple_errors_pct: 93.88,
                critical_errors_pct: 83.33,
            },
        }
    }
}

/// Tolerance on the recomputed F statistic.
pub const F_TOLERANCE: f64 = 0.3;
/// Tolerance on percentages, in percentage points.
pub const PCT_TOLERANCE: f64 = 0.01;
/// Printed averages carry two decimals.
pub const AVERAGE_TOLERANCE: f64 = 0.005;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub expected: f64,
    pub got: f64,
    pub tolerance: f64,
    /// `expected` is an exclusive upper bound rather than a target value.
    pub upper_bound: bool,
    pub pass: bool,
}

impl CheckResult {
    fn near(name: &str, expected: f64, got: f64, tolerance: f64) -> Self {
        let pass = (expected - got).abs() <= tolerance;
        CheckResult { name: name.into(), expected, got, tolerance, upper_bound: false, pass }
    }

    fn below(name: &str, bound: f64, got: f64) -> Self {
        CheckResult { name: name.into(), expected: bound, got, tolerance: 0.0, upper_bound: true, pass: got < bound }
    }
}

fn summary(g: &GroupFigures, m: Moments) -> GroupSummary {
    GroupSummary { n: g.participants, mean: m.mean_s, sd: m.sd_s }
}

fn pct(name: &str, expected: f64, baseline: f64, treatment: f64) -> CheckResult {
    let got = percent_improvement(baseline, treatment).map_or(f64::NAN, |f| 100.0 * f);
    CheckResult::near(name, expected, got, PCT_TOLERANCE)
}

impl PublishedFigures {
    pub fn group(&self, condition: Condition) -> &GroupFigures {
        match condition {
            Condition::Tablet => &self.tablet,
            Condition::Hmd => &self.hmd,
        }
    }

    /// Recomputes every derived figure from the cited inputs and compares it
    /// with the printed value.
    pub fn checks(&self) -> Vec<CheckResult> {
        let (t, h) = (&self.tablet, &self.hmd);
        let mut out = Vec::new();
        match anova_oneway_summary(&[summary(t, t.total), summary(h, h.total)]) {
            Ok(r) => {
                out.push(CheckResult::near("total time F", self.total_time_f, r.statistic, F_TOLERANCE));
                let (d1, d2) = r.df.unwrap_or((f64::NAN, f64::NAN));
                out.push(CheckResult::near("total time df1", self.total_time_df.0 as f64, d1, 0.0));
                out.push(CheckResult::near("total time df2", self.total_time_df.1 as f64, d2, 0.0));
                out.push(CheckResult::below("total time p", self.total_time_p_below, r.p_value));
            }
            Err(_) => out.push(CheckResult::near("total time F", self.total_time_f, f64::NAN, F_TOLERANCE)),
        }
        for (label, g) in [("tablet", t), ("hmd", h)] {
            let w = weighted_total(&g.errors);
            out.push(CheckResult::near(
                &alloc::format!("{label} weighted errors"),
                g.weighted_errors as f64,
                w as f64,
                0.0,
            ));
            out.push(CheckResult::near(
                &alloc::format!("{label} raw errors"),
                g.raw_errors as f64,
                g.errors.raw_total() as f64,
                0.0,
            ));
            out.push(CheckResult::near(
                &alloc::format!("{label} average weighted errors"),
                g.average_weighted_errors,
                w as f64 / g.participants as f64,
                AVERAGE_TOLERANCE,
            ));
        }
        let i = &self.improvements;
        out.push(pct("total time reduction %", i.total_time_pct, t.total.mean_s, h.total.mean_s));
        out.push(pct("one-handed time reduction %", i.one_handed_time_pct, t.one_handed.mean_s, h.one_handed.mean_s));
        out.push(pct("two-handed time reduction %", i.two_handed_time_pct, t.two_handed.mean_s, h.two_handed.mean_s));
        out.push(pct(
            "weighted error reduction %",
            i.weighted_errors_pct,
            t.average_weighted_errors,
            h.average_weighted_errors,
        ));
        out.push(pct(
            "simple error reduction %",
            i.simple_errors_pct,
            t.errors.simple as f64,
            h.errors.simple as f64,
        ));
        out.push(pct(
            "critical error reduction %",
            i.critical_errors_pct,
            t.errors.critical as f64,
            h.errors.critical as f64,
        ));
        out
    }

    /// Per-session targets for profile calibration.
    pub fn calibration_target(&self, condition: Condition) -> CalibrationTarget {
        let g = self.group(condition);
        let per = |x: u64| x as f64 / g.participants as f64;
        CalibrationTarget {
            total_mean_s: g.total.mean_s,
            total_sd_s: g.total.sd_s,
            one_handed_s: g.one_handed.mean_s,
            two_handed_s: g.two_handed.mean_s,
            simple_per_session: per(g.errors.simple),
            critical_per_session: per(g.errors.critical),
            repetition_per_session: per(g.errors.repetition),
        }
    }
}

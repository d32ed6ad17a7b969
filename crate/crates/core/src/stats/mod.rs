//! Statistical tests used to compare the two study conditions, and the
//! normality-gated choice between them.

pub mod anova;
pub mod dist;
pub mod mann_whitney;
pub mod shapiro;

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use anova::{anova_oneway_raw, anova_oneway_summary};
pub use mann_whitney::{mann_whitney, DEFAULT_EXACT_THRESHOLD};
pub use shapiro::shapiro_wilk;

/// Significance level used to decide normality.
pub const NORMALITY_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("sample size {n} outside [{min}, {max}]")]
    SampleSize { n: usize, min: usize, max: usize },
    #[error("sample is empty")]
    EmptySample,
    #[error("sample contains a non-finite value")]
    NonFinite,
    #[error("degenerate data (no variance)")]
    Degenerate,
    #[error("need at least two groups, got {0}")]
    TooFewGroups(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub label: String,
    pub values: Vec<f64>,
}

impl Sample {
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> Result<Self, StatsError> {
        if values.is_empty() {
            return Err(StatsError::EmptySample);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite);
        }
        Ok(Sample { label: label.into(), values })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n − 1 divisor).
    pub sd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StatisticName {
    #[serde(rename = "W_sw")]
    WShapiro,
    U,
    #[serde(rename = "W_ranksum")]
    WRankSum,
    F,
}

impl StatisticName {
    pub fn as_str(self) -> &'static str {
        match self {
            StatisticName::WShapiro => "W_sw",
            StatisticName::U => "U",
            StatisticName::WRankSum => "W_ranksum",
            StatisticName::F => "F",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub statistic_name: StatisticName,
    pub df: Option<(f64, f64)>,
    pub p_value: f64,
    /// Whether the p-value comes from full enumeration or a closed form.
    pub exact: bool,
    /// A second statistic reported alongside the main one.
    pub companion: Option<(StatisticName, f64)>,
}

pub fn mean_sd(sample: &Sample) -> Result<GroupSummary, StatsError> {
    let n = sample.values.len();
    if n < 2 {
        return Err(StatsError::SampleSize { n, min: 2, max: usize::MAX });
    }
    let mean = sample.values.iter().sum::<f64>() / n as f64;
    let ss: f64 = sample.values.iter().map(|x| (x - mean) * (x - mean)).sum();
    Ok(GroupSummary { n, mean, sd: libm::sqrt(ss / (n - 1) as f64) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Anova,
    MannWhitney,
}

/// ANOVA when both normality tests fail to reject at `alpha`, otherwise
/// Mann-Whitney. A sample the normality test cannot assess (wrong size,
/// constant) counts as non-normal.
pub fn choose_method(normality_a: Option<f64>, normality_b: Option<f64>, alpha: f64) -> Method {
    match (normality_a, normality_b) {
        (Some(pa), Some(pb)) if pa >= alpha && pb >= alpha => Method::Anova,
        _ => Method::MannWhitney,
    }
}

/// Outcome of comparing one measurement between two groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub normality_a: Option<TestResult>,
    pub normality_b: Option<TestResult>,
    pub method: Method,
    pub test: TestResult,
}

/// Normality check on each group, then the matching two-group test.
pub fn compare(a: &Sample, b: &Sample, alpha: f64) -> Result<Comparison, StatsError> {
    let normality_a = shapiro_wilk(a).ok();
    let normality_b = shapiro_wilk(b).ok();
    let method = choose_method(
        normality_a.as_ref().map(|r| r.p_value),
        normality_b.as_ref().map(|r| r.p_value),
        alpha,
    );
    let test = match method {
        Method::Anova => anova_oneway_raw(&[a.clone(), b.clone()])?,
        Method::MannWhitney => mann_whitney(a, b, DEFAULT_EXACT_THRESHOLD)?,
    };
    Ok(Comparison { normality_a, normality_b, method, test })
}

//! One-way ANOVA from raw observations or from per-group summaries.

use super::dist::f_sf;
use super::{GroupSummary, Sample, StatisticName, StatsError, TestResult};

fn finish(ss_between: f64, ss_within: f64, k: usize, total_n: usize) -> Result<TestResult, StatsError> {
    let df1 = (k - 1) as f64;
    let df2 = (total_n - k) as f64;
    if ss_within <= 0.0 && ss_between <= 0.0 {
        return Err(StatsError::Degenerate);
    }
    let f = if ss_within <= 0.0 { f64::INFINITY } else { (ss_between / df1) / (ss_within / df2) };
    Ok(TestResult {
        statistic: f,
        statistic_name: StatisticName::F,
        df: Some((df1, df2)),
        p_value: f_sf(f, df1, df2),
        exact: false,
        companion: None,
    })
}

pub fn anova_oneway_raw(groups: &[Sample]) -> Result<TestResult, StatsError> {
    if groups.len() < 2 {
        return Err(StatsError::TooFewGroups(groups.len()));
    }
    if let Some(g) = groups.iter().find(|g| g.values.len() < 2) {
        return Err(StatsError::SampleSize { n: g.values.len(), min: 2, max: usize::MAX });
    }
    let total_n: usize = groups.iter().map(|g| g.values.len()).sum();
    let grand = groups.iter().flat_map(|g| g.values.iter()).sum::<f64>() / total_n as f64;
    let mut ss_between = 0.0;
    let mut ss_within = 0.0;
    for g in groups {
        let n = g.values.len() as f64;
        let mean = g.values.iter().sum::<f64>() / n;
        ss_between += n * (mean - grand) * (mean - grand);
        ss_within += g.values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>();
    }
    finish(ss_between, ss_within, groups.len(), total_n)
}

pub fn anova_oneway_summary(groups: &[GroupSummary]) -> Result<TestResult, StatsError> {
    if groups.len() < 2 {
        return Err(StatsError::TooFewGroups(groups.len()));
    }
    if let Some(g) = groups.iter().find(|g| g.n < 2) {
        return Err(StatsError::SampleSize { n: g.n, min: 2, max: usize::MAX });
    }
    let total_n: usize = groups.iter().map(|g| g.n).sum();
    let grand = groups.iter().map(|g| g.n as f64 * g.mean).sum::<f64>() / total_n as f64;
    let ss_between: f64 = groups.iter().map(|g| g.n as f64 * (g.mean - grand) * (g.mean - grand)).sum();
    let ss_within: f64 = groups.iter().map(|g| (g.n - 1) as f64 * g.sd * g.sd).sum();
    finish(ss_between, ss_within, groups.len(), total_n)
}

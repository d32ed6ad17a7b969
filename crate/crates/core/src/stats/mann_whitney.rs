//! Mann-Whitney-Wilcoxon rank-sum test.
//!
//! Conventions: ties get midranks. The reported statistic is
//! `U = R_a − n_a(n_a + 1)/2` for the first sample (what R calls `W`), and
//! the companion value is the raw rank sum `R_a`. The two-sided p-value is
//! `P(|U − n_a·n_b/2| ≥ |U_obs − n_a·n_b/2|)` under random labelling.

use alloc::vec;
use alloc::vec::Vec;

use super::dist::normal_sf;
use super::{Sample, StatisticName, StatsError, TestResult};

/// Default cutoff on `n_a + n_b` for exact enumeration.
pub const DEFAULT_EXACT_THRESHOLD: usize = 16;

/// Doubled midranks of the pooled data, so ranks stay integral under ties.
pub fn doubled_midranks(pooled: &[f64]) -> Vec<u64> {
    let n = pooled.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| pooled[i].total_cmp(&pooled[j]));
    let mut ranks = vec![0u64; n];
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && pooled[order[j]] == pooled[order[i]] {
            j += 1;
        }
        // Ranks i+1..=j share the midrank (i + 1 + j) / 2.
        let twice = (i + 1 + j) as u64;
        for &k in &order[i..j] {
            ranks[k] = twice;
        }
        i = j;
    }
    ranks
}

fn tie_sizes(pooled: &[f64]) -> Vec<u64> {
    let mut sorted = pooled.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut sizes = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        sizes.push((j - i) as u64);
        i = j;
    }
    sizes
}

/// Exact two-sided p from the distribution of doubled rank sums over all
/// `C(N, n_a)` subsets, counted by dynamic programming.
fn exact_p(ranks2: &[u64], n_a: usize, observed_u2: i64) -> f64 {
    let max_sum: u64 = ranks2.iter().sum();
    let width = max_sum as usize + 1;
    // counts[k][s]: subsets of size k with doubled rank sum s.
    let mut counts = vec![vec![0f64; width]; n_a + 1];
    counts[0][0] = 1.0;
    for &r in ranks2 {
        let r = r as usize;
        for k in (1..=n_a).rev() {
            let (lo, hi) = counts.split_at_mut(k);
            let prev = &lo[k - 1];
            let cur = &mut hi[0];
            for s in (r..width).rev() {
                if prev[s - r] != 0.0 {
                    cur[s] += prev[s - r];
                }
            }
        }
    }
    let n_b = ranks2.len() - n_a;
    let offset = (n_a * (n_a + 1)) as i64;
    let center = (n_a * n_b) as i64;
    let observed_dev = (observed_u2 - center).abs();
    let mut total = 0.0;
    let mut extreme = 0.0;
    for (s, &c) in counts[n_a].iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        total += c;
        if (s as i64 - offset - center).abs() >= observed_dev {
            extreme += c;
        }
    }
    (extreme / total).clamp(0.0, 1.0)
}

pub fn mann_whitney(a: &Sample, b: &Sample, exact_threshold: usize) -> Result<TestResult, StatsError> {
    let (n_a, n_b) = (a.values.len(), b.values.len());
    if n_a == 0 || n_b == 0 {
        return Err(StatsError::EmptySample);
    }
    let pooled: Vec<f64> = a.values.iter().chain(&b.values).copied().collect();
    let ranks2 = doubled_midranks(&pooled);
    let r_a2: u64 = ranks2[..n_a].iter().sum();
    let u2 = r_a2 as i64 - (n_a * (n_a + 1)) as i64;
    let u = u2 as f64 / 2.0;
    let rank_sum = r_a2 as f64 / 2.0;
    let n = n_a + n_b;

    let (p_value, exact) = if n <= exact_threshold {
        (exact_p(&ranks2, n_a, u2), true)
    } else {
        let (na, nb, nf) = (n_a as f64, n_b as f64, n as f64);
        let ties: f64 = tie_sizes(&pooled).iter().map(|&t| (t * t * t - t) as f64).sum();
        let var = na * nb / 12.0 * ((nf + 1.0) - ties / (nf * (nf - 1.0)));
        let p = if var <= 0.0 {
            1.0
        } else {
            let dev = (libm::fabs(u - na * nb / 2.0) - 0.5).max(0.0);
            (2.0 * normal_sf(dev / libm::sqrt(var))).min(1.0)
        };
        (p, false)
    };

    Ok(TestResult {
        statistic: u,
        statistic_name: StatisticName::U,
        df: None,
        p_value,
        exact,
        companion: Some((StatisticName::WRankSum, rank_sum)),
    })
}

//! Shapiro-Wilk normality test using Royston's approximations (AS R94),
//! valid for 3 ≤ n ≤ 50 here.

use alloc::vec::Vec;

use super::dist::{normal_quantile, normal_sf};
use super::{Sample, StatisticName, StatsError, TestResult};

pub const MIN_N: usize = 3;
pub const MAX_N: usize = 50;

fn poly(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

const C1: [f64; 6] = [0.0, 0.221_157, -0.147_981, -2.071_19, 4.434_685, -2.706_056];
const C2: [f64; 6] = [0.0, 0.042_981, -0.293_762, -1.752_461, 5.682_633, -3.582_633];
const C3: [f64; 4] = [0.544, -0.399_78, 0.025_054, -6.714e-4];
const C4: [f64; 4] = [1.3822, -0.778_57, 0.062_767, -0.002_032_2];
const C5: [f64; 4] = [-1.5861, -0.310_82, -0.083_751, 0.003_891_5];
const C6: [f64; 3] = [-0.4803, -0.082_676, 0.003_030_2];
const G: [f64; 2] = [-2.273, 0.459];

/// Upper-half coefficients `a_1 ≥ a_2 ≥ … ≥ a_{n/2}`; the full vector is
/// antisymmetric with unit norm.
pub fn coefficients(n: usize) -> Vec<f64> {
    let half = n / 2;
    if n == 3 {
        return alloc::vec![core::f64::consts::FRAC_1_SQRT_2];
    }
    let nf = n as f64;
    let m: Vec<f64> = (1..=half).map(|i| normal_quantile((i as f64 - 0.375) / (nf + 0.25))).collect();
    let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
    let ssumm2 = libm::sqrt(summ2);
    let rsn = 1.0 / libm::sqrt(nf);
    let a1 = poly(&C1, rsn) - m[0] / ssumm2;
    let mut a = alloc::vec![0.0; half];
    a[0] = a1;
    let (first, fac) = if n > 5 {
        let a2 = -m[1] / ssumm2 + poly(&C2, rsn);
        a[1] = a2;
        let fac = libm::sqrt(
            (summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2),
        );
        (2, fac)
    } else {
        (1, libm::sqrt((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1)))
    };
    for i in first..half {
        a[i] = -m[i] / fac;
    }
    a
}

/// W statistic of `values`.
pub fn w_statistic(values: &[f64]) -> Result<f64, StatsError> {
    let n = values.len();
    if !(MIN_N..=MAX_N).contains(&n) {
        return Err(StatsError::SampleSize { n, min: MIN_N, max: MAX_N });
    }
    let mut x = values.to_vec();
    x.sort_by(f64::total_cmp);
    let range = x[n - 1] - x[0];
    if range.is_nan() || range <= 0.0 {
        return Err(StatsError::Degenerate);
    }
    // Work on standardized data so the statistic is location-scale invariant
    // up to rounding in the standardization itself.
    let mean = x.iter().sum::<f64>() / n as f64;
    for v in &mut x {
        *v = (*v - mean) / range;
    }
    let mean2 = x.iter().sum::<f64>() / n as f64;
    let ss: f64 = x.iter().map(|v| (v - mean2) * (v - mean2)).sum();
    let a = coefficients(n);
    let num: f64 = a.iter().enumerate().map(|(i, ai)| ai * (x[n - 1 - i] - x[i])).sum();
    Ok((num * num / ss).min(1.0))
}

/// p-value for statistic `w` at sample size `n`.
pub fn p_value(w: f64, n: usize) -> f64 {
    if w >= 1.0 {
        return 1.0;
    }
    let nf = n as f64;
    if n == 3 {
        let p = 6.0 / core::f64::consts::PI * (libm::asin(libm::sqrt(w)) - core::f64::consts::FRAC_PI_3);
        return p.clamp(0.0, 1.0);
    }
    let mut y = libm::log(1.0 - w);
    let (m, s) = if n <= 11 {
        let gamma = poly(&G, nf);
        if y >= gamma {
            return 0.0;
        }
        y = -libm::log(gamma - y);
        (poly(&C3, nf), libm::exp(poly(&C4, nf)))
    } else {
        let ln_n = libm::log(nf);
        (poly(&C5, ln_n), libm::exp(poly(&C6, ln_n)))
    };
    normal_sf((y - m) / s).clamp(0.0, 1.0)
}

pub fn shapiro_wilk(sample: &Sample) -> Result<TestResult, StatsError> {
    let w = w_statistic(&sample.values)?;
    Ok(TestResult {
        statistic: w,
        statistic_name: StatisticName::WShapiro,
        df: None,
        p_value: p_value(w, sample.values.len()),
        exact: sample.values.len() == 3,
        companion: None,
    })
}

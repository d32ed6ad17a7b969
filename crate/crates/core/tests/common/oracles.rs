//! Independent reference computations for the statistics module.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use replisync_core::stats::GroupSummary;

/// U by direct pair counting: wins of `a` over `b`, ties count one half.
pub fn pair_count_u(a: &[f64], b: &[f64]) -> f64 {
    let mut u = 0.0;
    for x in a {
        for y in b {
            if x > y {
                u += 1.0;
            } else if x == y {
                u += 0.5;
            }
        }
    }
    u
}

/// Two-sided p by enumerating every labelling of the pooled data.
pub fn brute_force_p(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let n = pooled.len();
    let k = a.len();
    let center = (a.len() * b.len()) as f64 / 2.0;
    let observed = (pair_count_u(a, b) - center).abs();
    let (mut hits, mut total) = (0u64, 0u64);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let (mut xa, mut xb) = (Vec::new(), Vec::new());
        for (i, v) in pooled.iter().enumerate() {
            if mask & (1 << i) != 0 {
                xa.push(*v);
            } else {
                xb.push(*v);
            }
        }
        total += 1;
        if (pair_count_u(&xa, &xb) - center).abs() >= observed {
            hits += 1;
        }
    }
    hits as f64 / total as f64
}

/// Raw data with exactly the requested size, mean and sample SD.
pub fn moment_matched(rng: &mut ChaCha8Rng, g: GroupSummary) -> Vec<f64> {
    let z: Vec<f64> = (0..g.n).map(|_| rng.random::<f64>() - 0.5).collect();
    let m = z.iter().sum::<f64>() / g.n as f64;
    let s = (z.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (g.n - 1) as f64).sqrt();
    z.iter().map(|v| g.mean + g.sd * (v - m) / s).collect()
}


mod common;

use common::oracles::{brute_force_p, moment_matched, pair_count_u};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use replisync_core::stats::{
    self, anova_oneway_raw, anova_oneway_summary, mann_whitney, mean_sd, shapiro, shapiro_wilk, GroupSummary,
    Method, Sample, StatisticName,
};

fn sample(v: &[f64]) -> Sample {
    Sample::new("s", v.to_vec()).unwrap()
}

#[test]
fn mann_whitney_exact_matches_enumeration_for_all_small_sizes() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut checked = 0;
    for total in 2..=10usize {
        for n_a in 1..total {
            let n_b = total - n_a;
            for trial in 0..12 {
                let draw = |rng: &mut ChaCha8Rng, n: usize| -> Vec<f64> {
                    if trial % 2 == 0 {
                        (0..n).map(|_| rng.random_range(0..4) as f64).collect()
                    } else {
                        (0..n).map(|_| rng.random::<f64>()).collect()
                    }
                };
                let a = draw(&mut rng, n_a);
                let b = draw(&mut rng, n_b);
                let r = mann_whitney(&sample(&a), &sample(&b), 16).unwrap();
                assert!(r.exact);
                assert_eq!(r.statistic, pair_count_u(&a, &b), "{a:?} vs {b:?}");
                let want = brute_force_p(&a, &b);
                assert!((r.p_value - want).abs() < 1e-12, "{a:?} vs {b:?}: {} vs {want}", r.p_value);
                checked += 1;
            }
        }
    }
    assert_eq!(checked, 12 * 45);
}

#[test]
fn mann_whitney_reference_values() {
    // Reference: scipy.stats.mannwhitneyu(method="exact").
    let r = mann_whitney(&sample(&[1.0, 5.0, 8.0, 2.5]), &sample(&[3.0, 9.0, 11.0, 12.0, 4.0, 6.0]), 16).unwrap();
    assert_eq!(r.statistic, 5.0);
    assert!((r.p_value - 0.17142857142857143).abs() < 1e-12);
    assert_eq!(r.companion, Some((StatisticName::WRankSum, 15.0)));
}

#[test]
fn mann_whitney_normal_path_approaches_exact() {
    let a: Vec<f64> = (0..9).map(|i| i as f64 * 1.3).collect();
    let b: Vec<f64> = (0..9).map(|i| 4.0 + i as f64 * 1.1).collect();
    let exact = mann_whitney(&sample(&a), &sample(&b), 18).unwrap();
    let approx = mann_whitney(&sample(&a), &sample(&b), 0).unwrap();
    assert!(exact.exact && !approx.exact);
    assert!((exact.p_value - approx.p_value).abs() < 0.01, "{} vs {}", exact.p_value, approx.p_value);
}

proptest! {
    #[test]
    fn u_statistics_are_complementary(
        a in prop::collection::vec(-1e3f64..1e3, 1..15),
        b in prop::collection::vec(-1e3f64..1e3, 1..15),
    ) {
        let ua = mann_whitney(&sample(&a), &sample(&b), 0).unwrap().statistic;
        let ub = mann_whitney(&sample(&b), &sample(&a), 0).unwrap().statistic;
        prop_assert_eq!(ua + ub, (a.len() * b.len()) as f64);
    }

    #[test]
    fn mann_whitney_p_is_a_probability(
        a in prop::collection::vec(0u8..6, 1..12),
        b in prop::collection::vec(0u8..6, 1..12),
    ) {
        let a: Vec<f64> = a.into_iter().map(f64::from).collect();
        let b: Vec<f64> = b.into_iter().map(f64::from).collect();
        for threshold in [0, 16] {
            let p = mann_whitney(&sample(&a), &sample(&b), threshold).unwrap().p_value;
            prop_assert!((0.0..=1.0).contains(&p));
        }
    }
}

// ---------------------------------------------------------------- Shapiro-Wilk

#[test]
fn shapiro_wilk_three_points() {
    let r = shapiro_wilk(&sample(&[1.0, 2.0, 3.0])).unwrap();
    assert!((r.statistic - 1.0).abs() < 1e-9);
    assert_eq!(r.statistic_name, StatisticName::WShapiro);
}

#[test]
fn shapiro_wilk_n3_coefficient_is_exactly_one_over_root_two() {
    // With a = (−1/√2, 0, 1/√2), W = ((x3 − x1)² / 2) / Σ(x − x̄)²; for
    // {1, 2, 4}: 4.5 / 4.6667 = 27/28.
    let w = shapiro::w_statistic(&[1.0, 2.0, 4.0]).unwrap();
    assert!((w - 27.0 / 28.0).abs() < 1e-12);
}

/// A uniform(0, 10) sample of 20 values, rounded to 6 decimals.
const UNIFORM_20: [f64; 20] = [
    2.80076, 4.611467, 1.217197, 5.226084, 4.091684, 0.716395, 0.989667, 9.862884, 6.940679, 4.486885, 6.401768,
    2.704889, 3.01874, 0.733421, 0.525856, 8.074751, 8.133053, 0.049716, 3.300553, 0.890869,
];

/// Expected normal order statistics for n = 20, estimated from 10⁷ sorted
/// standard-normal draws.
const EXPECTED_ORDER_STATS_20: [f64; 20] = [
    -1.8672362312415485, -1.4074079873970728, -1.1307065283067532, -0.9207936150118428, -0.7452405436719288,
    -0.5901913386132205, -0.4482205189357076, -0.3148606638520195, -0.1868502008864658, -0.061910064155207445,
    0.06207460658413655, 0.1871143078121126, 0.31509813930877895, 0.44850449056283503, 0.5904156636900035,
    0.7454514425254098, 0.9210538799354778, 1.1310017695112287, 1.4077048543160993, 1.8674171308776844,
];

/// W built from Monte-Carlo order statistics instead of the closed-form
/// quantile approximation, with the same tail correction on the two outer
/// coefficients.
fn order_statistic_oracle(x: &[f64], m_full: &[f64]) -> f64 {
    let n = x.len();
    let half = n / 2;
    let m: Vec<f64> = (0..half).map(|i| -(m_full[n - 1 - i] - m_full[i]) / 2.0).collect();
    let summ2: f64 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
    let rsn = 1.0 / (n as f64).sqrt();
    let poly = |c: &[f64], x: f64| c.iter().enumerate().map(|(i, ci)| ci * x.powi(i as i32)).sum::<f64>();
    let a1 = poly(&[0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056], rsn) - m[0] / summ2.sqrt();
    let a2 = poly(&[0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633], rsn) - m[1] / summ2.sqrt();
    let fac = ((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2)).sqrt();
    let mut a: Vec<f64> = m.iter().map(|v| -v / fac).collect();
    a[0] = a1;
    a[1] = a2;
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let mean = s.iter().sum::<f64>() / n as f64;
    let ss: f64 = s.iter().map(|v| (v - mean).powi(2)).sum();
    let num: f64 = (0..half).map(|i| a[i] * (s[n - 1 - i] - s[i])).sum();
    num * num / ss
}

#[test]
fn shapiro_wilk_n20_against_order_statistic_oracle() {
    let oracle = order_statistic_oracle(&UNIFORM_20, &EXPECTED_ORDER_STATS_20);
    assert!((oracle - 0.9250382184066992).abs() < 1e-9, "oracle drifted: {oracle}");
    let w = shapiro::w_statistic(&UNIFORM_20).unwrap();
    assert!((w - oracle).abs() < 1e-3, "{w} vs {oracle}");
    // Classic tabulated coefficients for n = 20 give 0.92484.
    assert!((w - 0.9248398462419578).abs() < 1e-3);
}

/// (sample, W, p) from an independent implementation (scipy.stats.shapiro).
fn reference_cases() -> Vec<(Vec<f64>, f64, f64)> {
    vec![
        (vec![2.1, 3.4, 1.9, 5.6, 4.4, 3.3, 2.8], 0.9401366781979513, 0.6399513746153818),
        ((1..=15).map(f64::from).collect(), 0.963593490193899, 0.7545333025106032),
        (vec![0.5, 0.7, 0.2, 9.0, 0.1, 0.4], 0.5547370850737561, 0.00012544902101008218),
        (vec![1.0, 2.0, 4.0], 0.9642857142857142, 0.6368868450289689),
        (vec![3.1, 2.2, 5.0, 4.1], 0.9888977047478505, 0.9517551195281156),
        (vec![1.0, 2.0, 3.0, 4.0, 5.0, 100.0, 7.0, 8.0, 9.0, 10.0, 11.0], 0.4559811595159542, 4.501649071299365e-07),
        (UNIFORM_20.to_vec(), 0.924729869344651, 0.12221986196480256),
    ]
}

#[test]
fn shapiro_wilk_matches_reference_implementation() {
    // The reference runs in single precision, hence the loose tolerances.
    for (x, w_ref, p_ref) in reference_cases() {
        let r = shapiro_wilk(&sample(&x)).unwrap();
        assert!((r.statistic - w_ref).abs() < 2e-5, "{x:?}: W {} vs {w_ref}", r.statistic);
        assert!((r.p_value - p_ref).abs() < 1e-3 * p_ref.max(0.01), "{x:?}: p {} vs {p_ref}", r.p_value);
    }
}

proptest! {
    #[test]
    fn shapiro_wilk_is_location_scale_invariant(x in prop::collection::vec(-100.0f64..100.0, 3..=50)) {
        let w = match shapiro::w_statistic(&x) {
            Ok(w) => w,
            Err(_) => return Ok(()),
        };
        let y: Vec<f64> = x.iter().map(|v| 7.3 * v - 20.0).collect();
        let wy = shapiro::w_statistic(&y).unwrap();
        prop_assert!((w - wy).abs() < 1e-12, "{} vs {}", w, wy);
        prop_assert!(w > 0.0 && w <= 1.0);
        let p = shapiro::p_value(w, x.len());
        prop_assert!((0.0..=1.0).contains(&p));
    }
}

// ---------------------------------------------------------------- ANOVA

#[test]
fn anova_raw_and_summary_agree_on_moment_matched_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..100 {
        let k = rng.random_range(2..=5);
        let groups: Vec<GroupSummary> = (0..k)
            .map(|_| GroupSummary {
                n: rng.random_range(2..=25),
                mean: rng.random_range(-50.0..50.0),
                sd: rng.random_range(0.1..20.0),
            })
            .collect();
        let raw: Vec<Sample> = groups.iter().map(|g| sample(&moment_matched(&mut rng, *g))).collect();
        let f_raw = anova_oneway_raw(&raw).unwrap();
        let f_sum = anova_oneway_summary(&groups).unwrap();
        assert!(
            (f_raw.statistic - f_sum.statistic).abs() <= 1e-9 * f_sum.statistic.max(1.0),
            "{} vs {}",
            f_raw.statistic,
            f_sum.statistic
        );
        assert_eq!(f_raw.df, f_sum.df);
        assert!((f_raw.p_value - f_sum.p_value).abs() < 1e-9);
        // The moments really are matched.
        for (s, g) in raw.iter().zip(&groups) {
            let got = mean_sd(s).unwrap();
            assert!((got.mean - g.mean).abs() < 1e-9 && (got.sd - g.sd).abs() < 1e-9);
        }
    }
}

#[test]
fn published_total_time_groups() {
    let r = anova_oneway_summary(&[
        GroupSummary { n: 19, mean: 763.65, sd: 76.80 },
        GroupSummary { n: 20, mean: 623.55, sd: 67.70 },
    ])
    .unwrap();
    assert!((36.3..=36.9).contains(&r.statistic), "{}", r.statistic);
    assert_eq!(r.df, Some((1.0, 37.0)));
    assert!(r.p_value < 1e-6);
    // Reference: scipy.stats.f.sf(36.6, 1, 37).
    assert!((stats::dist::f_sf(36.6, 1.0, 37.0) - 5.37597082650491e-07).abs() < 1e-15);
}

proptest! {
    #[test]
    fn anova_is_scale_invariant(
        a in prop::collection::vec(-100.0f64..100.0, 2..12),
        b in prop::collection::vec(-100.0f64..100.0, 2..12),
        c in 0.01f64..1000.0,
    ) {
        let f = match anova_oneway_raw(&[sample(&a), sample(&b)]) { Ok(r) => r.statistic, Err(_) => return Ok(()) };
        let sa: Vec<f64> = a.iter().map(|v| v * c).collect();
        let sb: Vec<f64> = b.iter().map(|v| v * c).collect();
        let g = anova_oneway_raw(&[sample(&sa), sample(&sb)]).unwrap().statistic;
        prop_assert!(f >= 0.0);
        prop_assert!((f - g).abs() <= 1e-9 * f.max(1.0), "{} vs {}", f, g);
    }
}

// ---------------------------------------------------------------- pipeline

#[test]
fn pipeline_branches_on_normality() {
    let normal_a: Vec<f64> = (0..19).map(|i| 700.0 + 10.0 * ((i as f64) - 9.0)).collect();
    let normal_b: Vec<f64> = normal_a.iter().map(|v| v - 140.0).collect();
    let cmp = stats::compare(&sample(&normal_a), &sample(&normal_b), stats::NORMALITY_ALPHA).unwrap();
    assert_eq!(cmp.method, Method::Anova);

    let skewed: Vec<f64> = (0..19).map(|i| (1.6f64).powi(i)).collect();
    let cmp = stats::compare(&sample(&skewed), &sample(&normal_b), stats::NORMALITY_ALPHA).unwrap();
    assert_eq!(cmp.method, Method::MannWhitney);
    assert_eq!(cmp.test.statistic_name, StatisticName::U);
}

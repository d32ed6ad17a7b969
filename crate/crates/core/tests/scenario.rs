use replisync_core::metrics::SessionMetrics;
use replisync_core::published::PublishedFigures;
use replisync_core::scenario::checks::{god_view, hmd_pairing, restores_initial_state};
use replisync_core::scenario::plan::registry;
use replisync_core::scenario::profile::{expected_times, PlanShape};
use replisync_core::scenario::{
    build_default_plan, calibrated_profiles, default_setup, run_session, Condition, EventKind, InspectionPlan,
    ProfileSet, SessionSetup,
};
use replisync_core::scene::Handedness;
use replisync_core::session::BlockKind;

const BOTH: [Condition; 2] = [Condition::Tablet, Condition::Hmd];

fn fixture() -> (SessionSetup, InspectionPlan, ProfileSet) {
    let setup = default_setup().unwrap();
    let plan = build_default_plan(&registry(&setup.model), None).unwrap();
    let profiles = calibrated_profiles(&PublishedFigures::default(), &plan).unwrap();
    (setup, plan, profiles)
}

fn error_free(p: &ProfileSet) -> ProfileSet {
    let mut p = *p;
    for op in [&mut p.tablet, &mut p.hmd] {
        op.p_simple = 0.0;
        op.p_critical = 0.0;
        op.p_repeat = 0.0;
    }
    p
}

#[test]
fn same_seed_gives_identical_log_and_trace() {
    let (setup, plan, profiles) = fixture();
    for c in BOTH {
        let a = run_session(&setup, &plan, c, &profiles, 42).unwrap();
        let b = run_session(&setup, &plan, c, &profiles, 42).unwrap();
        assert_eq!(serde_json::to_string(&a.log).unwrap(), serde_json::to_string(&b.log).unwrap());
        assert_eq!(serde_json::to_string(&a.trace).unwrap(), serde_json::to_string(&b.trace).unwrap());
        let c2 = run_session(&setup, &plan, c, &profiles, 43).unwrap();
        assert_ne!(a.log, c2.log);
    }
}

#[test]
fn error_free_sessions_restore_the_plant() {
    let (setup, plan, profiles) = fixture();
    let clean = error_free(&profiles);
    for c in BOTH {
        for seed in 0..10 {
            let run = run_session(&setup, &plan, c, &clean, seed).unwrap();
            let m = SessionMetrics::from_log("s", &run.log).unwrap();
            assert_eq!((m.simple, m.critical, m.repetition), (0, 0, 0));
            restores_initial_state(&setup, &run).unwrap();
        }
    }
}

#[test]
fn sessions_with_errors_are_still_put_back() {
    let (setup, plan, profiles) = fixture();
    let mut any_critical = false;
    for seed in 0..60 {
        let run = run_session(&setup, &plan, Condition::Tablet, &profiles, seed).unwrap();
        any_critical |= SessionMetrics::from_log("s", &run.log).unwrap().critical > 0;
        restores_initial_state(&setup, &run).unwrap();
    }
    assert!(any_critical, "no critical error in 60 tablet sessions");
}

#[test]
fn every_hmd_instruction_follows_an_indication_commit() {
    let (setup, plan, profiles) = fixture();
    let ops = PlanShape::of(&plan).ops();
    for seed in 0..20 {
        let run = run_session(&setup, &plan, Condition::Hmd, &profiles, seed).unwrap();
        let checked = hmd_pairing(&run.log).unwrap();
        assert!(checked >= 2 * ops, "seed {seed}: only {checked} instructions checked");
    }
}

#[test]
fn expert_avatar_hovers_above_the_operator() {
    let (setup, plan, profiles) = fixture();
    let anchor = setup.model.world_anchor.position;
    let run = run_session(&setup, &plan, Condition::Hmd, &profiles, 3).unwrap();
    let checked = god_view(&run.trace, profiles.expert.avatar_elevation_m, anchor).unwrap();
    assert!(checked >= PlanShape::of(&plan).ops());
}

#[test]
fn all_parties_end_with_the_same_shared_model() {
    let (setup, plan, profiles) = fixture();
    for c in BOTH {
        let run = run_session(&setup, &plan, c, &profiles, 9).unwrap();
        assert!(run.expert_shared.fields_eq(&run.host_shared));
        assert!(run.operator_shared.fields_eq(&run.host_shared));
    }
}

#[test]
fn plan_blocks_have_four_and_two_operations() {
    let (setup, ..) = fixture();
    for shuffle in [None, Some(1), Some(2)] {
        let plan = build_default_plan(&registry(&setup.model), shuffle).unwrap();
        for b in plan.blocks() {
            match b.kind() {
                BlockKind::OneHanded => assert_eq!(b.ops().len(), 4),
                BlockKind::TwoHanded => assert_eq!(b.ops().len(), 2),
                BlockKind::NoManipulation => assert!(b.ops().is_empty()),
            }
        }
    }
}

#[test]
fn reported_temperatures_lie_between_the_inlets() {
    let (setup, plan, profiles) = fixture();
    for seed in 0..10 {
        let run = run_session(&setup, &plan, Condition::Hmd, &profiles, seed).unwrap();
        let reports: Vec<f64> = run
            .log
            .events
            .iter()
            .filter_map(|e| match e.kind {
                EventKind::TemperatureReport { celsius } => Some(celsius),
                _ => None,
            })
            .collect();
        assert_eq!(reports.len(), 1);
        for t in reports {
            assert!((setup.plant.cold_inlet_c..=setup.plant.hot_inlet_c).contains(&t), "{t}");
        }
    }
}

#[test]
fn put_down_cost_applies_to_two_handed_tablet_work_only() {
    let (_, _, profiles) = fixture();
    let op = &profiles.tablet;
    assert!(op.putdown_ms(Condition::Tablet, Handedness::TwoHanded) > 0.0);
    assert_eq!(op.putdown_ms(Condition::Tablet, Handedness::OneHanded), 0.0);
    assert_eq!(op.putdown_ms(Condition::Hmd, Handedness::TwoHanded), 0.0);
}

/// Sample means over many sessions agree with the analytic expectation and
/// with the published group means.
#[test]
fn calibrated_sessions_match_the_target_moments() {
    let (setup, plan, profiles) = fixture();
    let figures = PublishedFigures::default();
    let shape = PlanShape::of(&plan);
    let n = 150;
    for c in BOTH {
        let runs: Vec<SessionMetrics> = (0..n)
            .map(|seed| SessionMetrics::from_log("s", &run_session(&setup, &plan, c, &profiles, seed).unwrap().log).unwrap())
            .collect();
        let mean = |f: fn(&SessionMetrics) -> f64| runs.iter().map(f).sum::<f64>() / n as f64;
        let (total, one, two) = (mean(|m| m.total_s), mean(|m| m.one_handed_s), mean(|m| m.two_handed_s));
        let sd = (runs.iter().map(|m| (m.total_s - total).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        let g = figures.group(c);
        let expected = expected_times(profiles.operator(c), &profiles.expert, &profiles.network, c, shape);
        // Four standard errors of the sample mean.
        let tol = 4.0 * g.total.sd_s / (n as f64).sqrt();
        assert!((total - g.total.mean_s).abs() < tol, "{c:?} total {total} vs {}", g.total.mean_s);
        assert!((total - expected.total_ms / 1000.0).abs() < tol);
        assert!((one - g.one_handed.mean_s).abs() < 0.25 * g.one_handed.sd_s, "{c:?} one-handed {one}");
        assert!((two - g.two_handed.mean_s).abs() < 0.25 * g.two_handed.sd_s, "{c:?} two-handed {two}");
        assert!((sd / g.total.sd_s - 1.0).abs() < 0.25, "{c:?} sd {sd}");
    }
}

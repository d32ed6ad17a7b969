mod common;

use common::merge::{precedence_violations, request, retention_violations, with_history};
use common::{plant, random_field_op, random_op};
use rand::Rng;
use replisync_core::replica::{create_replica, synchronize, RejectReason};
use replisync_core::rng;
use replisync_core::scene::{EditOp, ValveState};
use replisync_core::{ClientId, Role};

const CASES: u64 = 10_000;

#[test]
fn expert_value_wins_every_single_field_conflict() {
    assert_eq!(precedence_violations(5, CASES), 0);
}

#[test]
fn shared_annotations_survive_syncs_that_are_not_expert_removals() {
    let (checked, lost) = retention_violations(6, CASES);
    assert_eq!(lost, 0);
    assert!(checked > CASES / 2, "too few annotations exercised: {checked}");
}

#[test]
fn disjoint_requests_commute() {
    let mut r = rng::stream(7, b"disjoint");
    for _ in 0..1_000 {
        let shared = with_history(&mut r);
        let mut a_ops = Vec::new();
        let mut b_ops = Vec::new();
        for _ in 0..r.random_range(1..5) {
            a_ops.push(random_field_op(&mut r, &shared));
        }
        for _ in 0..r.random_range(1..5) {
            let op = random_field_op(&mut r, &shared);
            let node = op.field().unwrap().0;
            if a_ops.iter().all(|a| a.field().unwrap().0 != node) {
                b_ops.push(op);
            }
        }
        let roles = [Role::Expert, Role::Operator];
        let (ra, rb) = (roles[r.random_range(0..2)], roles[r.random_range(0..2)]);
        let base = shared.version;
        let ab = {
            let s = synchronize(&request(ra, base, a_ops.clone()), &shared).unwrap().merged;
            synchronize(&request(rb, base, b_ops.clone()), &s).unwrap().merged
        };
        let ba = {
            let s = synchronize(&request(rb, base, b_ops.clone()), &shared).unwrap().merged;
            synchronize(&request(ra, base, a_ops.clone()), &s).unwrap().merged
        };
        assert!(ab.fields_eq(&ba));
        assert_eq!(ab.version, ba.version);
    }
}

#[test]
fn rebase_equals_replaying_still_valid_pending_edits() {
    let mut r = rng::stream(8, b"rebase");
    for _ in 0..1_000 {
        let shared = with_history(&mut r);
        let mut replica = create_replica(&shared, ClientId::new("op").unwrap(), Role::Operator, 0.2).unwrap();
        for _ in 0..r.random_range(0..6) {
            let op = random_op(&mut r, &replica.working, Role::Operator, "x");
            replica.edit(op).unwrap();
        }
        let mut remote = shared.clone();
        for _ in 0..r.random_range(0..4) {
            let op = random_op(&mut r, &remote, Role::Expert, "x");
            remote = synchronize(&request(Role::Expert, remote.version, vec![op]), &remote).unwrap().merged;
        }
        let (rebased, dropped) = replica.rebase_replica(&remote);

        let mut oracle = remote.clone();
        let mut oracle_dropped = Vec::new();
        for e in &replica.pending {
            match oracle.apply_edit(e) {
                Ok(next) => oracle = next,
                Err(_) => oracle_dropped.push(e.clone()),
            }
        }
        assert!(rebased.working.fields_eq(&oracle));
        assert_eq!(dropped, oracle_dropped);
        assert_eq!(rebased.base_version, remote.version);
    }
}

#[test]
fn operator_edit_on_stale_expert_value_is_rejected() {
    let shared = plant();
    let v = common::nid("2V4");
    let s1 = synchronize(
        &request(Role::Expert, 0, vec![EditOp::SetValveState { node: v.clone(), state: ValveState::Closed }]),
        &shared,
    )
    .unwrap()
    .merged;
    let mut s = s1;
    for i in 0..5 {
        let op = EditOp::SetIndication { node: common::nid("1V1"), on: i % 2 == 0 };
        s = synchronize(&request(Role::Operator, s.version, vec![op]), &s).unwrap().merged;
    }
    let out = synchronize(
        &request(Role::Operator, s.version, vec![EditOp::SetValveState { node: v.clone(), state: ValveState::Open }]),
        &s,
    )
    .unwrap();
    assert_eq!(out.rejected[0].reason, RejectReason::ExpertPrecedence);
    assert_eq!(out.merged.nodes[&v].valve_state, Some(ValveState::Closed));
}

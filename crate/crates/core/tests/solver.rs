use tap_core::generate::small;
use tap_core::model::build;
use tap_core::solver::{brute_force, domain_size, solve, SolveConfig, Status};
use tap_core::verify::{check, CheckMode};
use tap_core::Instance;

const BUDGET: u64 = 2_000_000;

fn exact() -> SolveConfig {
    SolveConfig { optimality_required: true, time_limit: 30.0, ..SolveConfig::default() }
}

fn one_by_one(extra: &str) -> Instance {
    Instance::from_json(&format!(
        r#"{{"tas": [{{"id": "a", "year": 1, "employment_fraction": 0, "carryover_hours": 10}}],
            "bounds": {{"min_task_hours": 5, "soft_new_courses": 1}},
            "courses": [{{"id": "c", "tasks": [{{"kind": "admin", "total_hours": 10, "required_tas": 1}}]}}]{extra}}}"#
    ))
    .unwrap()
}

#[test]
fn single_schedule_is_optimal_at_zero() {
    let inst = one_by_one("");
    let out = solve(&build(&inst), &exact());
    assert_eq!(out.status, Status::Optimal);
    assert_eq!(out.objective, Some(0));
    assert_eq!(out.lower_bound, 0);
    assert_eq!(out.best.unwrap().hours(0, 0, 0), 10);
}

#[test]
fn forbidden_only_pair_is_infeasible() {
    let inst = one_by_one(r#", "pairs": [{"ta": "a", "course": "c", "forbidden": true}]"#);
    let out = solve(&build(&inst), &exact());
    assert_eq!(out.status, Status::Infeasible);
    assert!(out.best.is_none());
}

#[test]
fn agrees_with_the_oracle_on_small_instances() {
    let mut compared = 0;
    let mut feasible = 0;
    for seed in 0.. {
        if compared == 120 {
            break;
        }
        let inst = small(seed);
        let ir = build(&inst);
        if domain_size(&ir) > BUDGET as u128 {
            continue;
        }
        compared += 1;
        let oracle = brute_force(&ir, BUDGET).unwrap();
        let out = solve(&ir, &exact());
        assert_eq!(out.status, oracle.status, "seed {seed}");
        assert_eq!(out.objective, oracle.objective, "seed {seed}");
        if let Some(best) = &out.best {
            feasible += 1;
            let v = check(&inst, best, CheckMode::Strict).unwrap();
            assert_eq!(Some(v.total_objective), out.objective, "seed {seed}");
        }
    }
    assert!(feasible >= 10, "only {feasible} feasible instances");
}

#[test]
fn fixed_seed_is_reproducible() {
    let inst = small(11);
    let ir = build(&inst);
    let cfg = SolveConfig { seed: 5, ..exact() };
    assert_eq!(solve(&ir, &cfg).canonical_json(), solve(&ir, &cfg).canonical_json());
}

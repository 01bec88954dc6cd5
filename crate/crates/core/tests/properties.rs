//! Invariants checked over generated inputs.

use proptest::prelude::*;

use tap_core::instance::{capacity_report, compute_target, Fraction, Instance};
use tap_core::model::build;
use tap_core::solver::{solve, SolveConfig};
use tap_core::verify::{check, CheckMode};

fn quick(seed: u64) -> SolveConfig {
    SolveConfig { seed, time_limit: 20.0, ..Default::default() }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn instances_survive_a_round_trip(seed in any::<u64>()) {
        let inst = tap_core::generate::small(seed);
        let text = inst.to_json();
        let again = Instance::from_json(&text).unwrap();
        prop_assert_eq!(&again, &inst);
        prop_assert_eq!(again.to_json(), text);
    }

    #[test]
    fn target_rounds_half_up(num in 0u64..=1000, den in 1u64..=1000, carry in -500i64..500, load in 1i64..2000) {
        prop_assume!(num <= den);
        let f = Fraction::new(num, den).unwrap();
        let scaled = (2 * num as i128 * load as i128 + den as i128) / (2 * den as i128);
        prop_assert_eq!(compute_target(f, carry, load) as i128, scaled + carry as i128);
    }

    #[test]
    fn capacity_slack_is_supply_minus_demand(seed in any::<u64>()) {
        let inst = tap_core::generate::small(seed);
        let report = capacity_report(&inst);
        let supply: i64 = (0..inst.n_tas()).map(|s| inst.target(s) + inst.bounds().hard_dev).sum();
        prop_assert_eq!(report.slack, supply - inst.total_demand());
        prop_assert_eq!(report.warning, report.slack < 0);
    }

    #[test]
    fn solutions_pass_the_verifier_with_the_reported_objective(seed in 0u64..10_000) {
        let inst = tap_core::generate::small(seed);
        let out = solve(&build(&inst), &quick(seed));
        if let (Some(a), Some(objective)) = (&out.best, out.objective) {
            let verdict = check(&inst, a, CheckMode::Strict).unwrap();
            prop_assert_eq!(verdict.total_objective, objective);
            prop_assert!(out.lower_bound <= objective);
        }
    }

    #[test]
    fn incumbents_only_improve(seed in 0u64..10_000) {
        let inst = tap_core::generate::small(seed);
        let out = solve(&build(&inst), &quick(seed));
        let trace: Vec<i64> = out.stats.incumbents.iter().map(|r| r.objective).collect();
        prop_assert!(trace.windows(2).all(|w| w[1] <= w[0]), "{:?}", trace);
        if let Some(objective) = out.objective {
            prop_assert_eq!(trace.last().copied(), Some(objective));
        }
    }

    #[test]
    fn single_threaded_solves_repeat_exactly(seed in 0u64..10_000) {
        let ir = build(&tap_core::generate::small(seed));
        let first = solve(&ir, &quick(seed));
        let second = solve(&ir, &quick(seed));
        prop_assert_eq!(first.canonical_json(), second.canonical_json());
    }

    #[test]
    fn generation_depends_only_on_the_spec(seed in any::<u64>(), tas in 1usize..8, courses in 1usize..6) {
        let spec = tap_core::generate::GenSpec::new(tas, courses, 3, 0.8, seed);
        let a = tap_core::generate::generate(&spec).unwrap();
        let b = tap_core::generate::generate(&spec).unwrap();
        prop_assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn lp_text_depends_only_on_the_instance(seed in any::<u64>()) {
        let inst = tap_core::generate::small(seed);
        let reloaded = Instance::from_json(&inst.to_json()).unwrap();
        prop_assert_eq!(tap_core::encode::to_lp(&build(&inst)).text, tap_core::encode::to_lp(&build(&reloaded)).text);
    }
}

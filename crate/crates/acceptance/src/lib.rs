//! Acceptance criteria as runnable checks. Each check returns a [`Check`]
//! with a one-line summary of what it measured.

use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use tap_core::assignment::Assignment;
use tap_core::encode::{import_solution, read_solution_file, to_lp, to_smtlib};
use tap_core::generate::{generate, small, GenSpec};
use tap_core::instance::{Edit, EditKind, Instance, PenaltyMode, SoftFamily, TaskKind};
use tap_core::metrics::{build_report, Source};
use tap_core::model::build;
use tap_core::solver::{brute_force, domain_size, solve, warm_start, SolveConfig, SolveOutcome, Status};
use tap_core::verify::{check, CheckMode};
use tap_service::{replay, SessionStore};

/// Enumeration budget of the exhaustive oracle.
pub const ORACLE_BUDGET: u64 = 2_000_000;
/// Oracle-sized instances compared against the exhaustive search.
pub const ORACLE_INSTANCES: usize = 120;
/// Instances used for the weight monotonicity check.
pub const MONOTONICITY_INSTANCES: usize = 24;
/// Solve time limit at full scale, in seconds.
pub const FULL_TIME_LIMIT: f64 = 60.0;
/// Full-scale dimensions: TAs, courses, task kinds.
pub const FULL_SHAPE: (usize, usize, usize) = (50, 45, 10);

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Check {
    Pass(String),
    Fail(String),
    Skip(String),
}

impl Check {
    pub fn label(&self) -> &'static str {
        match self {
            Check::Pass(_) => "PASS",
            Check::Fail(_) => "FAIL",
            Check::Skip(_) => "SKIP",
        }
    }

    pub fn detail(&self) -> &str {
        match self {
            Check::Pass(d) | Check::Fail(d) | Check::Skip(d) => d,
        }
    }
}

/// Fails the enclosing check with a formatted reason.
macro_rules! ensure {
    ($cond:expr, $($why:tt)+) => {{
        let holds: bool = $cond;
        if !holds {
            return Check::Fail(format!($($why)+));
        }
    }};
}

fn exact() -> SolveConfig {
    SolveConfig { optimality_required: true, time_limit: 30.0, thread_budget: 1, ..SolveConfig::default() }
}

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests")
}

fn fixture(name: &str) -> Instance {
    Instance::load(fixture_dir().join("fixtures").join(format!("{name}.json"))).expect("fixture loads")
}

/// Seeds of the first `n` generated instances within the oracle budget.
fn oracle_seeds(n: usize) -> Vec<u64> {
    (0..).filter(|&seed| domain_size(&build(&small(seed))) <= ORACLE_BUDGET as u128).take(n).collect()
}

fn objective_of(inst: &Instance, a: &Assignment) -> Result<i64, String> {
    check(inst, a, CheckMode::Strict).map(|v| v.total_objective).map_err(|e| e.to_string())
}

pub fn oracle_equivalence() -> Check {
    let start = Instant::now();
    let mut feasible = 0;
    for seed in oracle_seeds(ORACLE_INSTANCES) {
        let ir = build(&small(seed));
        let oracle = match brute_force(&ir, ORACLE_BUDGET) {
            Ok(o) => o,
            Err(e) => return Check::Fail(format!("seed {seed}: {e}")),
        };
        let out = solve(&ir, &exact());
        ensure!(out.status == oracle.status, "seed {seed}: status {} vs oracle {}", out.status, oracle.status);
        ensure!(out.objective == oracle.objective, "seed {seed}: objective {:?} vs oracle {:?}", out.objective, oracle.objective);
        feasible += usize::from(out.best.is_some());
    }
    let took = start.elapsed();
    ensure!(took < Duration::from_secs(300), "took {:.1} s", took.as_secs_f64());
    Check::Pass(format!("{ORACLE_INSTANCES} instances ({feasible} feasible) agree with the oracle in {:.1} s", took.as_secs_f64()))
}

/// The full-scale instance with its warm start and solve, computed once.
pub struct FullRun {
    pub instance: Instance,
    pub warm: Option<Assignment>,
    pub warm_seconds: f64,
    pub outcome: SolveOutcome,
}

pub fn full_run() -> &'static FullRun {
    static RUN: OnceLock<FullRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let (tas, courses, kinds) = FULL_SHAPE;
        let instance = generate(&GenSpec::new(tas, courses, kinds, 0.9, 1)).expect("full-scale spec is valid");
        let ir = build(&instance);
        let cfg = SolveConfig { time_limit: FULL_TIME_LIMIT, seed: 1, ..SolveConfig::default() };
        let start = Instant::now();
        let warm = warm_start(&ir, &cfg);
        let warm_seconds = start.elapsed().as_secs_f64();
        let outcome = solve(&ir, &cfg);
        FullRun { instance, warm, warm_seconds, outcome }
    })
}

pub fn verifier_agreement() -> Check {
    let mut checked = 0;
    for seed in oracle_seeds(ORACLE_INSTANCES) {
        let inst = small(seed);
        let out = solve(&build(&inst), &exact());
        if let Some(best) = &out.best {
            match objective_of(&inst, best) {
                Ok(o) => ensure!(Some(o) == out.objective, "seed {seed}: verifier {o}, solver {:?}", out.objective),
                Err(e) => return Check::Fail(format!("seed {seed}: {e}")),
            }
            checked += 1;
        }
    }
    let run = full_run();
    let Some(best) = &run.outcome.best else {
        return Check::Fail(format!("full-scale solve returned no schedule ({})", run.outcome.status));
    };
    match objective_of(&run.instance, best) {
        Ok(o) => ensure!(Some(o) == run.outcome.objective, "full scale: verifier {o}, solver {:?}", run.outcome.objective),
        Err(e) => return Check::Fail(format!("full scale: {e}")),
    }
    Check::Pass(format!("{checked} oracle-suite schedules and the full-scale schedule verify with equal objectives"))
}

pub fn determinism() -> Check {
    let mut cases: Vec<(String, Instance)> = oracle_seeds(10).into_iter().map(|s| (format!("seed {s}"), small(s))).collect();
    cases.push(("three_by_two".into(), fixture("three_by_two")));
    let (tas, courses, kinds) = (12, 10, 5);
    cases.push(("12x10x5".into(), generate(&GenSpec::new(tas, courses, kinds, 0.9, 4)).expect("valid spec")));
    for (name, inst) in &cases {
        let ir = build(inst);
        let cfg = SolveConfig { seed: 7, thread_budget: 1, time_limit: 5.0, node_limit: Some(20_000), ..SolveConfig::default() };
        let render = |o: &SolveOutcome| {
            let schedule = o.best.as_ref().map(|b| b.to_solution_text(inst, &[])).unwrap_or_default();
            format!("{}\n{schedule}", o.canonical_json())
        };
        let (a, b) = (solve(&ir, &cfg), solve(&ir, &cfg));
        ensure!(render(&a) == render(&b), "{name}: two runs differ");
    }
    Check::Pass(format!("{} instances solve byte-identically twice with one thread", cases.len()))
}

pub fn anytime_at_full_scale() -> Check {
    let run = full_run();
    let Some(warm) = &run.warm else {
        return Check::Fail("warm start found no schedule".into());
    };
    ensure!(run.warm_seconds < 1.0, "warm start took {:.2} s", run.warm_seconds);
    let warm_objective = match objective_of(&run.instance, warm) {
        Ok(o) => o,
        Err(e) => return Check::Fail(format!("warm start is not hard-feasible: {e}")),
    };
    let out = &run.outcome;
    let Some(objective) = out.objective else {
        return Check::Fail(format!("solve returned no schedule ({})", out.status));
    };
    ensure!(objective <= warm_objective, "solve {objective} is worse than the warm start {warm_objective}");
    let trace: Vec<i64> = out.stats.incumbents.iter().map(|r| r.objective).collect();
    ensure!(trace.windows(2).all(|w| w[1] <= w[0]), "incumbents increase: {trace:?}");
    ensure!(trace.last() == Some(&objective), "last incumbent {:?} is not the objective {objective}", trace.last());
    ensure!(0 <= out.lower_bound && out.lower_bound <= objective, "lower bound {} outside [0, {objective}]", out.lower_bound);
    ensure!(out.stats.wall_time <= FULL_TIME_LIMIT + 5.0, "solve ran {:.1} s", out.stats.wall_time);
    Check::Pass(format!(
        "warm start {warm_objective} in {:.2} s; solve {objective} ({}), bound {}, {} incumbents in {:.1} s",
        run.warm_seconds,
        out.status,
        out.lower_bound,
        trace.len(),
        out.stats.wall_time
    ))
}

/// Directory holding a year of the public dataset converted to the instance
/// schema: `2022.json` and the manual schedule `2022_manual.sol`.
pub fn dataset_dir() -> Option<PathBuf> {
    let dir = PathBuf::from(std::env::var_os("TAP_DATASET")?);
    (dir.join("2022.json").is_file() && dir.join("2022_manual.sol").is_file()).then_some(dir)
}

pub fn dataset_check() -> Check {
    let Some(dir) = dataset_dir() else {
        return Check::Skip("dataset not available (set TAP_DATASET to a directory with 2022.json and 2022_manual.sol)".into());
    };
    let inst = match Instance::load(dir.join("2022.json")) {
        Ok(i) => i,
        Err(e) => return Check::Fail(format!("2022.json: {e}")),
    };
    let manual = match read_solution_file(&inst, dir.join("2022_manual.sol")) {
        Ok(a) => a,
        Err(e) => return Check::Fail(format!("2022_manual.sol: {e}")),
    };
    let report = match build_report(&inst, &manual, Source::Manual) {
        Ok(r) => r,
        Err(e) => return Check::Fail(e.to_string()),
    };
    ensure!((report.rmse - 92.97).abs() <= 0.01, "manual 2022 rmse {:.4}, expected 92.97", report.rmse);
    ensure!(report.hard_violations > 0, "audit found no hard violations in the manual schedule");
    Check::Pass(format!("manual 2022 rmse {:.2}, {} hard violations", report.rmse, report.hard_violations))
}

pub fn weight_monotonicity() -> Check {
    let mut instances = 0;
    let mut comparisons = 0;
    for seed in 0.. {
        if instances == MONOTONICITY_INSTANCES {
            break;
        }
        let base = small(seed);
        let weights = base.weights().with_mode(PenaltyMode::Indicator);
        let base = base.with_weights(weights);
        let ir = build(&base);
        if domain_size(&ir) > ORACLE_BUDGET as u128 {
            continue;
        }
        let Ok(optimum) = brute_force(&ir, ORACLE_BUDGET) else { continue };
        let Some(best) = optimum.best else { continue };
        instances += 1;
        let before = match check(&base, &best, CheckMode::Strict) {
            Ok(v) => v.soft_violations_by_family,
            Err(e) => return Check::Fail(format!("seed {seed}: {e}")),
        };
        for family in SoftFamily::ALL {
            let mut raised = weights;
            raised.set_weight(family, weights.weight(family) * 3 + 4);
            let inst = base.with_weights(raised);
            let out = match brute_force(&build(&inst), ORACLE_BUDGET) {
                Ok(o) => o,
                Err(e) => return Check::Fail(format!("seed {seed}: {e}")),
            };
            let Some(best) = out.best else {
                return Check::Fail(format!("seed {seed}: raising {family} made the instance infeasible"));
            };
            let after = match check(&inst, &best, CheckMode::Strict) {
                Ok(v) => v.soft_violations_by_family,
                Err(e) => return Check::Fail(format!("seed {seed}: {e}")),
            };
            let (b, a) = (before.get(&family).copied().unwrap_or(0), after.get(&family).copied().unwrap_or(0));
            ensure!(a <= b, "seed {seed}: raising {family} moved its violations from {b} to {a}");
            comparisons += 1;
        }
    }
    ensure!(instances >= 20, "only {instances} feasible oracle-sized instances");
    Check::Pass(format!("{comparisons} weight raises over {instances} instances never add violations"))
}

pub fn encoding_fidelity() -> Check {
    let golden = fixture_dir().join("golden");
    for name in ["tiny", "three_by_two"] {
        let inst = fixture(name);
        let ir = build(&inst);
        let smt = match to_smtlib(&ir) {
            Ok(a) => a,
            Err(e) => return Check::Fail(format!("{name}: {e}")),
        };
        let lp = to_lp(&ir);
        for (artifact, ext) in [(&lp, "lp"), (&smt, "smt2")] {
            let expected = std::fs::read_to_string(golden.join(format!("{name}.{ext}"))).unwrap_or_default();
            ensure!(artifact.text == expected, "{name}.{ext} differs from the golden file");
        }
        let out = solve(&ir, &exact());
        let Some(best) = &out.best else {
            return Check::Fail(format!("{name}: no schedule to round-trip"));
        };
        let path = std::env::temp_dir().join(format!("tap-acceptance-{}-{name}.sol", std::process::id()));
        if let Err(e) = std::fs::write(&path, best.to_solution_text(&inst, &[])) {
            return Check::Fail(format!("{}: {e}", path.display()));
        }
        for artifact in [&lp, &smt] {
            let back = match import_solution(artifact, &path) {
                Ok(a) => a,
                Err(e) => return Check::Fail(format!("{name}: {e}")),
            };
            match objective_of(&inst, &back) {
                Ok(o) => ensure!(Some(o) == out.objective, "{name}: imported objective {o}, solved {:?}", out.objective),
                Err(e) => return Check::Fail(format!("{name}: {e}")),
            }
        }
        let _ = std::fs::remove_file(&path);
    }
    Check::Pass("golden LP and SMT-LIB files match; imported own solutions keep their objective".into())
}

fn pin(ta: &str, course: &str, task: TaskKind, hours: i64) -> Edit {
    Edit::new(EditKind::PinHours { ta: ta.into(), course: course.into(), task, hours })
}

pub fn service_replay() -> Check {
    let store = SessionStore::in_memory();
    let base = fixture("three_by_two");
    let id = match store.create(&base.to_json()) {
        Ok(id) => id,
        Err(e) => return Check::Fail(e.to_string()),
    };
    let cfg = SolveConfig { seed: 3, thread_budget: 1, ..SolveConfig::default() };
    let pins = [("eva", "db", TaskKind::LabSession, 4), ("ana", "alg", TaskKind::Admin, 4)];
    let edits = [
        pin(pins[0].0, pins[0].1, pins[0].2, pins[0].3),
        Edit::new(EditKind::SetWeight { family: "w_soft_courses".into(), value: 9 }),
        pin(pins[1].0, pins[1].1, pins[1].2, pins[1].3),
        Edit::new(EditKind::Forbid { ta: "ben".into(), course: "alg".into() }),
    ];
    for (step, edit) in edits.into_iter().enumerate() {
        if let Err(e) = store.apply_edit(&id, edit) {
            return Check::Fail(format!("edit {step}: {e}"));
        }
        let stored = match store.start(&id, cfg.clone()).and_then(|job| store.run(job)) {
            Ok(s) => s,
            Err(e) => return Check::Fail(format!("solve after edit {step}: {e}")),
        };
        let Some(best) = &stored.outcome.best else {
            return Check::Fail(format!("no schedule after edit {step} ({})", stored.outcome.status));
        };
        let handle = store.get(&id).expect("session exists");
        let session = handle.lock().unwrap();
        let inst = session.instance();
        for &(ta, course, task, hours) in pins.iter().take(if step >= 2 { 2 } else { 1 }) {
            let (s, c, k) = (inst.ta_position(ta).unwrap(), inst.course_position(course).unwrap(), inst.kind_position(task).unwrap());
            ensure!(best.hours(s, c, k) == hours, "after edit {step}: {ta}/{course}/{task} has {} hours, pinned {hours}", best.hours(s, c, k));
        }
        let again = match replay(session.base(), session.edits(), &stored.config) {
            Ok(o) => o,
            Err(e) => return Check::Fail(format!("replay after edit {step}: {e}")),
        };
        ensure!(again.canonical_json() == stored.outcome.canonical_json(), "replay after edit {step} differs");
    }

    let id = store.create(&base.to_json()).expect("fixture is valid");
    for edit in [pin("ana", "alg", TaskKind::Admin, 2), pin("eva", "alg", TaskKind::Admin, 2)] {
        if let Err(e) = store.apply_edit(&id, edit) {
            return Check::Fail(format!("contradictory pin rejected as an edit: {e}"));
        }
    }
    let stored = match store.start(&id, cfg).and_then(|job| store.run(job)) {
        Ok(s) => s,
        Err(e) => return Check::Fail(e.to_string()),
    };
    ensure!(stored.outcome.status == Status::Infeasible, "contradictory pins gave {}", stored.outcome.status);
    let conflicts = tap_core::verify::pin_conflicts(store.get(&id).unwrap().lock().unwrap().instance());
    ensure!(conflicts.iter().any(|v| v.equation == "Eq13"), "contradictory pins not traced to the admin rule");
    Check::Pass("4 replays byte-identical, pins kept verbatim, contradictory pins infeasible (Eq13)".into())
}

/// Criterion number, title and check.
pub type Criterion = (u32, &'static str, fn() -> Check);

/// Every criterion in order.
pub fn criteria() -> Vec<Criterion> {
    vec![
        (1, "oracle equivalence", oracle_equivalence),
        (2, "verifier agreement", verifier_agreement),
        (3, "determinism", determinism),
        (4, "anytime at full scale", anytime_at_full_scale),
        (5, "dataset check", dataset_check),
        (6, "soft-weight monotonicity", weight_monotonicity),
        (7, "encoding fidelity", encoding_fidelity),
        (8, "service replay", service_replay),
    ]
}

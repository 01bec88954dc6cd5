//! Runs the `tap` binary and checks outputs and exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tap_core::instance::Instance;
use tap_core::model::build;
use tap_core::solver::{solve, SolveConfig};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

fn tap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tap")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Everything on `ana`: too many hours and an exercise session one TA short.
const OVERLOADED: &str = "x_s0_c0_t0 4\nx_s0_c0_t1 8\nx_s0_c1_t0 3\nx_s0_c1_t3 6\n";

#[test]
fn validate_prints_the_capacity_summary() {
    let out = tap(&["validate", "--instance", path(&fixture("three_by_two.json"))]);
    assert_eq!(out.status.code(), Some(0));
    let summary: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(summary["tas"], 3);
    assert_eq!(summary["capacity"]["total_demand"], 21);
}

#[test]
fn invalid_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"label": "x", "tas": [], "courses": [], "extra": 1}"#).unwrap();
    assert_eq!(tap(&["validate", "--instance", path(&bad)]).status.code(), Some(2));
    assert_eq!(tap(&["validate", "--instance", path(&dir.path().join("missing.json"))]).status.code(), Some(2));
    assert_eq!(tap(&["solve"]).status.code(), Some(2));
    let instance = fixture("three_by_two.json");
    assert_eq!(tap(&["solve", "--instance", path(&instance), "--threads", "0"]).status.code(), Some(2));
}

#[test]
fn solve_writes_a_solution_that_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let sol = dir.path().join("out.sol");
    let instance = fixture("three_by_two.json");
    let out = tap(&["solve", "--instance", path(&instance), "--time-limit", "60", "--seed", "2", "--threads", "1", "--out", path(&sol)]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("status optimal\n"), "{text}");

    let direct = solve(&build(&Instance::load(&instance).unwrap()), &SolveConfig { time_limit: 60.0, seed: 2, thread_budget: 1, ..Default::default() });
    assert!(text.contains(&format!("objective {}\n", direct.objective.unwrap())));

    let out = tap(&["verify", "--instance", path(&instance), "--solution", path(&sol)]);
    assert_eq!(out.status.code(), Some(0));
    let verdict: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(verdict["strict_ok"], true);
    assert_eq!(verdict["total_objective"], direct.objective.unwrap());
}

#[test]
fn repeated_single_thread_solves_write_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let instance = fixture("three_by_two.json");
    let files: Vec<String> = ["a", "b"]
        .iter()
        .map(|name| {
            let out = dir.path().join(format!("{name}.json"));
            let run = tap(&["solve", "--instance", path(&instance), "--threads", "1", "--seed", "9", "--outcome", path(&out)]);
            assert_eq!(run.status.code(), Some(0));
            let outcome: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
            serde_json::to_string(&outcome["best"]).unwrap()
        })
        .collect();
    assert_eq!(files[0], files[1]);
}

#[test]
fn blocked_instances_exit_with_one() {
    let out = tap(&["solve", "--instance", path(&fixture("tiny_forbidden.json"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).starts_with("status infeasible"));
}

#[test]
fn audit_mode_reports_manual_violations_without_failing() {
    let dir = tempfile::tempdir().unwrap();
    let manual = dir.path().join("manual.sol");
    std::fs::write(&manual, OVERLOADED).unwrap();
    let instance = fixture("three_by_two.json");
    let strict = tap(&["verify", "--instance", path(&instance), "--solution", path(&manual)]);
    assert_eq!(strict.status.code(), Some(1));
    let audit = tap(&["verify", "--instance", path(&instance), "--solution", path(&manual), "--audit"]);
    assert_eq!(audit.status.code(), Some(0));
    let verdict: serde_json::Value = serde_json::from_str(&stdout(&audit)).unwrap();
    let equations: Vec<&str> = verdict["hard_violations"].as_array().unwrap().iter().map(|v| v["equation"].as_str().unwrap()).collect();
    assert!(equations.contains(&"Eq9"), "{equations:?}");
}

#[test]
fn report_compares_against_a_manual_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let instance = fixture("three_by_two.json");
    let sol = dir.path().join("tap.sol");
    let manual = dir.path().join("manual.sol");
    std::fs::write(&manual, OVERLOADED).unwrap();
    tap(&["solve", "--instance", path(&instance), "--threads", "1", "--out", path(&sol)]);
    let charts = dir.path().join("charts");
    let out = tap(&["report", "--instance", path(&instance), "--solution", path(&sol), "--against-manual", path(&manual), "--out-dir", path(&charts)]);
    assert_eq!(out.status.code(), Some(0));
    let table = stdout(&out);
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("source"));
    assert!(lines[1].starts_with("tap ") && lines[1].contains("optimal"));
    assert!(lines[2].starts_with("manual"));
    for file in ["tap.json", "tap_scatter.csv", "manual_courses.csv", "comparison.csv"] {
        assert!(charts.join(file).exists(), "{file}");
    }
}

#[test]
fn export_and_import_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let instance = fixture("three_by_two.json");
    let sol = dir.path().join("tap.sol");
    let solved = tap(&["solve", "--instance", path(&instance), "--threads", "1", "--out", path(&sol)]);
    let objective = stdout(&solved).lines().find_map(|l| l.strip_prefix("objective ").map(str::to_string)).unwrap();
    for (format, golden) in [("lp", "three_by_two.lp"), ("smt2", "three_by_two.smt2")] {
        let out = tap(&["export", "--instance", path(&instance), "--format", format]);
        assert_eq!(out.status.code(), Some(0));
        let expected = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/golden").join(golden)).unwrap();
        assert_eq!(stdout(&out), expected);

        let back = dir.path().join(format!("back.{format}.sol"));
        let out = tap(&["import", "--instance", path(&instance), "--format", format, "--solution", path(&sol), "--out", path(&back)]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stderr).contains(&format!("objective {objective}")));
        let body = |p: &Path| std::fs::read_to_string(p).unwrap().lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n");
        assert_eq!(body(&back), body(&sol));
    }
}

#[test]
fn gen_is_seeded() {
    let args = ["gen", "--tas", "6", "--courses", "4", "--tasks", "3", "--seed", "11"];
    let a = tap(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout(&a), stdout(&tap(&args)));
    assert!(Instance::from_json(&stdout(&a)).is_ok());
    assert_eq!(tap(&["gen", "--tas", "0", "--courses", "1"]).status.code(), Some(2));
}

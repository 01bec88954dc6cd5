use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use tap_core::encode::{import_solution, import_text, to_lp, to_smtlib, ImportError};
use tap_core::model::{build, eliminate_fixed};
use tap_core::solver::{solve, SolveConfig, Status};
use tap_core::verify::{check, CheckMode};
use tap_core::Instance;

fn here(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join(rel)
}

fn fixture(name: &str) -> Instance {
    Instance::load(here(&format!("fixtures/{name}.json"))).unwrap()
}

/// Compares `text` with the golden file, or rewrites it when `UPDATE_GOLDEN`
/// is set.
fn golden(name: &str, text: &str) {
    let path = here(&format!("golden/{name}"));
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, text).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert!(expected == text, "{} differs from the emitted text; rerun with UPDATE_GOLDEN=1 after review", path.display());
}

#[test]
fn lp_golden_files() {
    for name in ["tiny", "three_by_two"] {
        golden(&format!("{name}.lp"), &to_lp(&build(&fixture(name))).text);
    }
}

#[test]
fn smtlib_golden_files() {
    for name in ["tiny", "tiny_forbidden", "three_by_two"] {
        golden(&format!("{name}.smt2"), &to_smtlib(&build(&fixture(name))).unwrap().text);
    }
}

#[test]
fn emission_is_stable() {
    let ir = build(&fixture("three_by_two"));
    assert_eq!(to_lp(&ir).text, to_lp(&build(&fixture("three_by_two"))).text);
    assert_eq!(to_smtlib(&ir).unwrap().text, to_smtlib(&ir).unwrap().text);
}

/// Words of an LP document by section.
fn lp_sections(text: &str) -> BTreeMap<&str, Vec<&str>> {
    let mut out: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    let mut section = "";
    for line in text.lines().filter(|l| !l.starts_with('\\')) {
        if !line.starts_with(' ') {
            section = line.trim();
            continue;
        }
        out.entry(section).or_default().extend(line.split_whitespace());
    }
    out
}

fn is_name(word: &str) -> bool {
    word.chars().next().is_some_and(|c| c.is_ascii_alphabetic()) && !word.ends_with(':')
}

#[test]
fn lp_declares_every_variable_once() {
    for name in ["tiny", "three_by_two"] {
        let art = to_lp(&build(&fixture(name)));
        let sections = lp_sections(&art.text);
        let declared: Vec<&str> = ["Generals", "Binaries"].iter().flat_map(|s| sections.get(s).cloned().unwrap_or_default()).collect();
        let unique: BTreeSet<&str> = declared.iter().copied().collect();
        assert_eq!(unique.len(), declared.len(), "{name}: repeated declaration");
        assert_eq!(unique.len(), art.varmap.len());
        for section in ["Minimize", "Subject To", "Bounds"] {
            for word in sections[section].iter().filter(|w| is_name(w)) {
                assert!(unique.contains(word), "{name}: {word} used in {section} but not declared");
            }
        }
    }
}

#[test]
fn smtlib_declares_every_variable_once() {
    let art = to_smtlib(&build(&fixture("three_by_two"))).unwrap();
    let declared: Vec<&str> =
        art.text.lines().filter_map(|l| l.strip_prefix("(declare-fun ")).map(|l| l.split_whitespace().next().unwrap()).collect();
    let unique: BTreeSet<&str> = declared.iter().copied().collect();
    assert_eq!((unique.len(), declared.len()), (art.varmap.len(), art.varmap.len()));
    for line in art.text.lines().filter(|l| l.starts_with("(assert")) {
        let body = line.split(":named").next().unwrap();
        for word in body.split(|c: char| c == '(' || c == ')' || c.is_whitespace()) {
            if word.contains('_') && !word.starts_with(':') && word != "assert-soft" {
                assert!(unique.contains(word), "{word} not declared");
            }
        }
    }
}

#[test]
fn lp_single_task_covering_row() {
    let text = to_lp(&build(&fixture("tiny"))).text;
    assert!(text.contains(" Eq6_c0_t0: x_s0_c0_t0 = 10\n"));
}

#[test]
fn own_solution_round_trips_through_import() {
    let inst = fixture("three_by_two");
    for ir in [build(&inst), eliminate_fixed(&build(&inst))] {
        let out = solve(&ir, &SolveConfig { optimality_required: true, ..SolveConfig::default() });
        assert_eq!(out.status, Status::Optimal);
        let best = out.best.as_ref().unwrap();
        let text = best.to_solution_text(&inst, &[("objective", out.objective.unwrap().to_string())]);
        let dir = std::env::temp_dir().join(format!("tap-import-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("own.sol");
        std::fs::write(&path, text).unwrap();
        for art in [to_lp(&ir), to_smtlib(&ir).unwrap()] {
            let back = import_solution(&art, &path).unwrap();
            assert_eq!(back.hours_slice(), best.hours_slice());
            let v = check(&inst, &back, CheckMode::Strict).unwrap();
            assert_eq!(Some(v.total_objective), out.objective);
        }
    }
}

#[test]
fn stated_derived_values_are_checked() {
    let inst = fixture("tiny");
    let art = to_lp(&build(&inst));
    let a = import_text(&art, "x_s0_c0_t0 10\nh_s0 10\nw_s0_c0 1\n").unwrap();
    assert!(check(&inst, &a, CheckMode::Strict).is_ok());
    let wrong = import_text(&art, "x_s0_c0_t0 10\nh_s0 8\n").unwrap();
    let v = check(&inst, &wrong, CheckMode::Audit).unwrap();
    assert_eq!(v.hard_violations[0].equation, "Eq2");
}

#[test]
fn external_unsat_maps_to_infeasible() {
    let inst = fixture("tiny_forbidden");
    let art = to_smtlib(&build(&inst)).unwrap();
    assert!(matches!(import_solution(&art, here("golden/tiny_forbidden.z3.out")), Err(ImportError::Infeasible)));
    assert_eq!(solve(&build(&inst), &SolveConfig::default()).status, Status::Infeasible);
}

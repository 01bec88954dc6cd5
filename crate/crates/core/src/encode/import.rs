use std::collections::HashMap;
use std::path::Path;

use thiserror::Error;

use crate::assignment::{Assignment, Claim};
use crate::instance::{Instance, TaskKind};
use crate::model::names::parse_x_name;
use crate::model::VarTag;

use super::EncodingArtifact;

#[derive(Debug, Error)]
pub enum ImportError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("the solver reported the model infeasible")]
    Infeasible,
    #[error("line {line}: expected `name value`, found {text:?}")]
    Malformed { line: usize, text: String },
    #[error("line {line}: {name} is given twice")]
    Duplicate { line: usize, name: String },
    #[error("no value for {0}")]
    MissingVariable(String),
    #[error("{name} = {value} is not an integer")]
    NonIntegerValue { name: String, value: String },
    #[error("line {line}: {name} names no cell of the instance")]
    UnknownCell { line: usize, name: String },
}

fn integer(name: &str, text: &str) -> Result<i64, ImportError> {
    if let Ok(v) = text.parse::<i64>() {
        return Ok(v);
    }
    let bad = || ImportError::NonIntegerValue { name: name.to_string(), value: text.to_string() };
    let v: f64 = text.parse().map_err(|_| bad())?;
    if v.fract() != 0.0 || !v.is_finite() || v.abs() > 1e15 {
        return Err(bad());
    }
    Ok(v as i64)
}

/// Reads a solution file for `artifact`. See [`import_text`].
pub fn import_solution(artifact: &EncodingArtifact, sol: impl AsRef<Path>) -> Result<Assignment, ImportError> {
    let path = sol.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ImportError::Io { path: path.display().to_string(), source })?;
    import_text(artifact, &text)
}

/// `(line, name, value)` entries of a solution text, duplicates refused.
fn entries(text: &str) -> Result<Vec<(usize, &str, &str)>, ImportError> {
    let mut out = Vec::new();
    let mut seen = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if out.is_empty() && matches!(line, "unsat" | "infeasible" | "INFEASIBLE") {
            return Err(ImportError::Infeasible);
        }
        let mut words = line.split_whitespace();
        let (Some(name), Some(value), None) = (words.next(), words.next(), words.next()) else {
            return Err(ImportError::Malformed { line: line_no, text: raw.to_string() });
        };
        if seen.insert(name, line_no).is_some() {
            return Err(ImportError::Duplicate { line: line_no, name: name.to_string() });
        }
        out.push((line_no, name, value));
    }
    Ok(out)
}

/// Parses `name value` lines (`#` starts a comment) into an assignment.
/// Every hour variable must be present; stated values of derived variables
/// become claims for the verifier; names the artifact does not know are
/// ignored. A first word of `unsat` or `infeasible` means no solution.
pub fn import_text(artifact: &EncodingArtifact, text: &str) -> Result<Assignment, ImportError> {
    let mut values: HashMap<&str, i64> = HashMap::new();
    for (_, name, value) in entries(text)? {
        if artifact.varmap.id(name).is_some() {
            values.insert(name, integer(name, value)?);
        }
    }

    let instance = artifact.instance();
    let mut a = Assignment::empty(instance);
    for &(tag, value) in &artifact.fixed {
        if let VarTag::X { ta, course, kind } = tag {
            a.set_hours(ta, course, kind, value);
        }
    }
    let mut claims = Vec::new();
    for (id, name) in artifact.varmap.iter() {
        let stated = values.get(name).copied();
        let claim = match artifact.varmap.tag(id) {
            VarTag::X { ta, course, kind } => {
                let value = stated.ok_or_else(|| ImportError::MissingVariable(name.to_string()))?;
                a.set_hours(ta, course, kind, value);
                continue;
            }
            VarTag::Y { ta, course, kind } => Claim::OnTask { ta, course, kind },
            VarTag::W { ta, course } => Claim::Teaches { ta, course },
            VarTag::H { ta } => Claim::Total { ta },
            VarTag::N { course, kind } => Claim::Staff { course, kind },
            VarTag::Z { ta } => Claim::NewCourses { ta },
            VarTag::Soft { .. } => continue,
        };
        if let Some(v) = stated {
            claims.push((claim, v));
        }
    }
    Ok(a.with_claims(claims))
}

/// Reads a solution file written for `instance`. See [`read_solution`].
pub fn read_solution_file(instance: &Instance, path: impl AsRef<Path>) -> Result<Assignment, ImportError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ImportError::Io { path: path.display().to_string(), source })?;
    read_solution(instance, &text)
}

/// Reads a solution in the import format without an encoding at hand, as
/// for hand-made schedules: hour cells may be omitted and count as 0, other
/// names are ignored.
pub fn read_solution(instance: &Instance, text: &str) -> Result<Assignment, ImportError> {
    let mut a = Assignment::empty(instance);
    for (line, name, value) in entries(text)? {
        let Some((ta, course, code)) = parse_x_name(name) else { continue };
        let kind = TaskKind::from_code(code).and_then(|k| instance.kind_position(k));
        match kind {
            Some(k) if ta < instance.n_tas() && course < instance.n_courses() => a.set_hours(ta, course, k, integer(name, value)?),
            _ => return Err(ImportError::UnknownCell { line, name: name.to_string() }),
        }
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encode::to_lp;
    use crate::instance::Instance;
    use crate::model::build;

    fn artifact() -> EncodingArtifact {
        let inst = Instance::from_json(
            r#"{"tas": [{"id": "a", "year": 1, "employment_fraction": 0, "carryover_hours": 10},
                        {"id": "b", "year": 1, "employment_fraction": 0, "carryover_hours": 10}],
                "courses": [{"id": "c", "tasks": [{"kind": "admin", "total_hours": 10, "required_tas": 1}]}]}"#,
        )
        .unwrap();
        to_lp(&build(&inst))
    }

    #[test]
    fn reads_hours_and_claims() {
        let a = import_text(&artifact(), "# Objective value = 3\nx_s0_c0_t0 10\nx_s1_c0_t0 0.0\nh_s0 9\nviol_eq15_s0 1\nfoo 7\n")
            .unwrap();
        assert_eq!((a.hours(0, 0, 0), a.hours(1, 0, 0)), (10, 0));
        assert_eq!(a.claims(), &[(Claim::Total { ta: 0 }, 9)]);
    }

    #[test]
    fn missing_x_is_named() {
        match import_text(&artifact(), "x_s0_c0_t0 10\n") {
            Err(ImportError::MissingVariable(name)) => assert_eq!(name, "x_s1_c0_t0"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn fractional_hours_are_refused() {
        assert!(matches!(
            import_text(&artifact(), "x_s0_c0_t0 2.5\nx_s1_c0_t0 7.5\n"),
            Err(ImportError::NonIntegerValue { name, .. }) if name == "x_s0_c0_t0"
        ));
    }

    #[test]
    fn unsat_means_infeasible() {
        assert!(matches!(import_text(&artifact(), "unsat\n"), Err(ImportError::Infeasible)));
    }

    #[test]
    fn sparse_solutions_default_to_zero() {
        let inst = artifact().instance().clone();
        let a = read_solution(&inst, "# manual\nx_s1_c0_t0 10\nh_s1 10\n").unwrap();
        assert_eq!(a.hours_slice(), &[0, 10]);
        assert!(matches!(read_solution(&inst, "x_s2_c0_t0 1\n"), Err(ImportError::UnknownCell { line: 1, .. })));
        let written = a.to_solution_text(&inst, &[]);
        assert_eq!(read_solution(&inst, &written).unwrap(), a);
    }

    #[test]
    fn malformed_and_duplicate_lines() {
        assert!(matches!(import_text(&artifact(), "x_s0_c0_t0\n"), Err(ImportError::Malformed { line: 1, .. })));
        assert!(matches!(
            import_text(&artifact(), "x_s0_c0_t0 1\nx_s0_c0_t0 2\n"),
            Err(ImportError::Duplicate { line: 2, .. })
        ));
    }
}

use std::fmt::Write;

use crate::instance::PenaltyMode;
use crate::model::{ModelIR, VarId};

use super::{header, row_names, EncodingArtifact, Format, ModeError, VarMap};

fn int(v: i64) -> String {
    if v < 0 {
        format!("(- {})", v.unsigned_abs())
    } else {
        v.to_string()
    }
}

fn sum(terms: &[(i64, VarId)], map: &VarMap) -> String {
    let parts: Vec<String> = terms
        .iter()
        .map(|&(c, v)| if c == 1 { map.name(v).to_string() } else { format!("(* {} {})", int(c), map.name(v)) })
        .collect();
    match parts.len() {
        0 => "0".to_string(),
        1 => parts.into_iter().next().unwrap(),
        _ => format!("(+ {})", parts.join(" ")),
    }
}

/// SMT-LIB v2 document over integers: one hard assertion per row, one
/// weighted soft assertion per soft term asking its indicator to stay 0.
pub fn to_smtlib(ir: &ModelIR) -> Result<EncodingArtifact, ModeError> {
    if ir.mode != PenaltyMode::Indicator {
        return Err(ModeError(ir.mode));
    }
    let map = VarMap::new(ir);
    let mut out = String::new();
    for line in header(ir) {
        let _ = writeln!(out, "; {line}");
    }
    out.push_str("(set-option :produce-models true)\n");
    for v in &ir.variables {
        let _ = writeln!(out, "(declare-fun {} () Int)", map.name(v.id));
    }
    for v in &ir.variables {
        let name = map.name(v.id);
        if v.lo == v.hi {
            let _ = writeln!(out, "(assert (= {name} {}))", int(v.lo));
        } else {
            let _ = writeln!(out, "(assert (and (<= {} {name}) (<= {name} {})))", int(v.lo), int(v.hi));
        }
    }
    for (row, name) in ir.constraints.iter().zip(row_names(ir)) {
        let _ = writeln!(out, "(assert (! ({} {} {}) :named {name}))", row.relation.symbol(), sum(&row.terms, &map), int(row.rhs));
    }
    for t in &ir.soft_terms {
        let _ = writeln!(out, "(assert-soft (= {} 0) :weight {})", map.name(t.realization.var()), t.weight);
    }
    out.push_str("(check-sat)\n(get-objectives)\n(get-model)\n");
    Ok(EncodingArtifact::new(ir, Format::Smtlib2Maxsmt, out, map))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{Instance, SoftFamily};
    use crate::model::build;

    fn tiny() -> Instance {
        Instance::from_json(
            r#"{"tas": [{"id": "a", "year": 1, "employment_fraction": 0, "carryover_hours": 10}],
                "courses": [{"id": "c", "tasks": [{"kind": "admin", "total_hours": 10, "required_tas": 1}]}]}"#,
        )
        .unwrap()
    }

    #[test]
    fn magnitude_mode_is_refused() {
        let inst = tiny();
        let ir = build(&inst.with_weights(inst.weights().with_mode(PenaltyMode::Magnitude)));
        assert_eq!(to_smtlib(&ir).unwrap_err(), ModeError(PenaltyMode::Magnitude));
    }

    #[test]
    fn every_soft_term_is_asserted_with_its_weight() {
        let ir = build(&tiny());
        let doc = to_smtlib(&ir).unwrap();
        assert_eq!(doc.text.matches("(assert-soft ").count(), ir.soft_terms.len());
        let new_courses = ir.soft_terms.iter().find(|t| t.family == SoftFamily::SoftNewCourses).unwrap();
        assert_eq!(new_courses.weight, 0);
        let line = format!("(assert-soft (= {} 0) :weight 0)", doc.varmap.name(new_courses.realization.var()));
        assert!(doc.text.contains(&line), "{}", doc.text);
        assert!(doc.text.contains("(assert (! (= x_s0_c0_t0 10) :named Eq6_c0_t0))"));
    }

    #[test]
    fn negative_numbers_use_unary_minus() {
        assert_eq!(int(-3), "(- 3)");
        assert_eq!(int(4), "4");
    }
}

use std::fmt::Write;

use crate::model::{ModelIR, VarId, VarKind};

use super::{header, row_names, EncodingArtifact, Format, VarMap};

const TERMS_PER_LINE: usize = 8;

fn push_terms(out: &mut String, terms: &[(i64, VarId)], map: &VarMap) {
    for (i, &(coef, v)) in terms.iter().enumerate() {
        if i > 0 && i % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let sign = if coef < 0 { "-" } else { "+" };
        let magnitude = coef.abs();
        if i == 0 && coef >= 0 {
            if magnitude == 1 {
                let _ = write!(out, " {}", map.name(v));
            } else {
                let _ = write!(out, " {magnitude} {}", map.name(v));
            }
        } else if magnitude == 1 {
            let _ = write!(out, " {sign} {}", map.name(v));
        } else {
            let _ = write!(out, " {sign} {magnitude} {}", map.name(v));
        }
    }
}

/// CPLEX LP document: minimize the weighted soft realizations subject to
/// every hard row.
pub fn to_lp(ir: &ModelIR) -> EncodingArtifact {
    let map = VarMap::new(ir);
    let mut out = String::new();
    for line in header(ir) {
        let _ = writeln!(out, "\\ {line}");
    }

    out.push_str("Minimize\n obj:");
    let objective: Vec<(i64, VarId)> = ir.soft_terms.iter().filter(|t| t.weight != 0).map(|t| (t.weight, t.realization.var())).collect();
    let dummy = ir.variables.first().map(|v| v.id);
    match (objective.is_empty(), dummy) {
        (false, _) => push_terms(&mut out, &objective, &map),
        (true, Some(v)) => push_terms(&mut out, &[(0, v)], &map),
        (true, None) => out.push_str(" 0 dummy"),
    }
    out.push('\n');

    out.push_str("Subject To\n");
    for (row, name) in ir.constraints.iter().zip(row_names(ir)) {
        let _ = write!(out, " {name}:");
        match (row.terms.is_empty(), dummy) {
            (false, _) => push_terms(&mut out, &row.terms, &map),
            (true, Some(v)) => push_terms(&mut out, &[(0, v)], &map),
            (true, None) => out.push_str(" 0 dummy"),
        }
        let _ = writeln!(out, " {} {}", row.relation.symbol(), row.rhs);
    }

    out.push_str("Bounds\n");
    for v in ir.variables.iter().filter(|v| v.kind == VarKind::Integer) {
        let name = map.name(v.id);
        if v.lo == v.hi {
            let _ = writeln!(out, " {name} = {}", v.lo);
        } else {
            let _ = writeln!(out, " {} <= {name} <= {}", v.lo, v.hi);
        }
    }
    if dummy.is_none() {
        out.push_str(" dummy = 0\n");
    }

    for (section, kind) in [("Generals", VarKind::Integer), ("Binaries", VarKind::Binary)] {
        let names: Vec<&str> = ir.variables.iter().filter(|v| v.kind == kind).map(|v| map.name(v.id)).collect();
        if names.is_empty() {
            continue;
        }
        let _ = writeln!(out, "{section}");
        for chunk in names.chunks(TERMS_PER_LINE) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    out.push_str("End\n");
    EncodingArtifact::new(ir, Format::LpFormat, out, map)
}

use std::collections::HashMap;

use super::{LinearConstraint, ModelIR, OriginTag, Realization, Relation, SoftTerm, VarId, Variable};

/// Removes hour variables pinned to a constant by forbidden-pair or
/// absent-task fixings and substitutes the constant everywhere.
///
/// Rows left without terms are dropped when satisfied and kept (as an
/// unsatisfiable `0 <rel> rhs`) otherwise, so infeasibility is preserved.
pub fn eliminate_fixed(ir: &ModelIR) -> ModelIR {
    let mut fixed: HashMap<VarId, i64> = HashMap::new();
    for row in &ir.constraints {
        let fixing = matches!(row.origin.tag, OriginTag::Eq(1) | OriginTag::Eq(5));
        if fixing && row.relation == Relation::Eq && row.terms.len() == 1 && row.terms[0].0 == 1 {
            fixed.insert(row.terms[0].1, row.rhs);
        }
    }

    let mut remap = vec![None; ir.variables.len()];
    let mut variables = Vec::with_capacity(ir.variables.len() - fixed.len());
    for v in &ir.variables {
        if fixed.contains_key(&v.id) {
            continue;
        }
        let id = VarId(variables.len() as u32);
        remap[v.id.index()] = Some(id);
        variables.push(Variable { id, ..v.clone() });
    }

    let mut constraints = Vec::with_capacity(ir.constraints.len());
    for row in &ir.constraints {
        let mut rhs = row.rhs;
        let mut terms = Vec::with_capacity(row.terms.len());
        for &(coef, v) in &row.terms {
            match remap[v.index()] {
                Some(id) => terms.push((coef, id)),
                None => rhs -= coef * fixed[&v],
            }
        }
        if terms.is_empty() && row.relation.holds(0, rhs) {
            continue;
        }
        constraints.push(LinearConstraint { terms, relation: row.relation, rhs, origin: row.origin });
    }

    let soft_terms = ir
        .soft_terms
        .iter()
        .map(|t| {
            let var = remap[t.realization.var().index()].expect("soft realizations are never fixed");
            let realization = match t.realization {
                Realization::Indicator(_) => Realization::Indicator(var),
                Realization::Slack(_) => Realization::Slack(var),
            };
            SoftTerm { realization, ..*t }
        })
        .collect();

    let mut eliminated = ir.eliminated.clone();
    let mut newly: Vec<_> = fixed.iter().map(|(v, &value)| (v.index(), value)).collect();
    newly.sort_unstable();
    eliminated.extend(newly.into_iter().map(|(i, value)| (ir.variables[i].tag, value)));

    ModelIR::assemble(ir.instance().clone(), variables, constraints, soft_terms, ir.provenance.clone(), eliminated)
}

use std::collections::BTreeMap;

use serde::Serialize;

use super::{ModelIR, VarTag};

/// Size of a model broken down by variable family, constraint origin and
/// soft family.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModelStats {
    pub variables: BTreeMap<String, usize>,
    pub constraints: BTreeMap<String, usize>,
    pub soft_terms: BTreeMap<String, usize>,
    pub total_variables: usize,
    pub total_constraints: usize,
    pub total_soft_terms: usize,
    pub eliminated: usize,
}

pub fn model_stats(ir: &ModelIR) -> ModelStats {
    let mut variables = BTreeMap::new();
    for v in &ir.variables {
        let family = match v.tag {
            VarTag::X { .. } => "x",
            VarTag::Y { .. } => "y",
            VarTag::W { .. } => "w",
            VarTag::H { .. } => "h",
            VarTag::N { .. } => "n",
            VarTag::Z { .. } => "z",
            VarTag::Soft { .. } => "soft",
        };
        *variables.entry(family.to_string()).or_insert(0) += 1;
    }
    let mut constraints = BTreeMap::new();
    for row in &ir.constraints {
        *constraints.entry(row.origin.tag.to_string()).or_insert(0) += 1;
    }
    let mut soft_terms = BTreeMap::new();
    for term in &ir.soft_terms {
        *soft_terms.entry(term.family.tag().to_string()).or_insert(0) += 1;
    }
    ModelStats {
        variables,
        constraints,
        soft_terms,
        total_variables: ir.variables.len(),
        total_constraints: ir.constraints.len(),
        total_soft_terms: ir.soft_terms.len(),
        eliminated: ir.eliminated.len(),
    }
}

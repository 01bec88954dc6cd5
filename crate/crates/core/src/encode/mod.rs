//! Exchange formats for external solvers: CPLEX LP for MILP solvers,
//! SMT-LIB v2 with weighted soft assertions for MaxSMT solvers, and the
//! import of their `name value` solution files.

mod import;
mod lp;
mod smtlib;

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{Instance, PenaltyMode};
use crate::model::{ModelIR, VarId, VarTag};

pub use import::{import_solution, import_text, read_solution, read_solution_file, ImportError};
pub use lp::to_lp;
pub use smtlib::to_smtlib;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    LpFormat,
    Smtlib2Maxsmt,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::LpFormat => "lp",
            Format::Smtlib2Maxsmt => "smt2",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("SMT-LIB export needs indicator penalties, the model uses {0} penalties")]
pub struct ModeError(pub PenaltyMode);

/// Bijection between model variables and their emitted names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarMap {
    names: Vec<String>,
    tags: Vec<VarTag>,
    by_name: HashMap<String, VarId>,
}

impl VarMap {
    fn new(ir: &ModelIR) -> Self {
        let names: Vec<String> = ir.variables.iter().map(|v| ir.var_name(v.id)).collect();
        let by_name = names.iter().enumerate().map(|(i, n)| (n.clone(), VarId(i as u32))).collect();
        VarMap { names, tags: ir.variables.iter().map(|v| v.tag).collect(), by_name }
    }

    pub fn name(&self, id: VarId) -> &str {
        &self.names[id.index()]
    }

    pub fn id(&self, name: &str) -> Option<VarId> {
        self.by_name.get(name).copied()
    }

    pub fn tag(&self, id: VarId) -> VarTag {
        self.tags[id.index()]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, &str)> {
        self.names.iter().enumerate().map(|(i, n)| (VarId(i as u32), n.as_str()))
    }
}

/// An emitted document with what is needed to read solutions back.
#[derive(Debug, Clone)]
pub struct EncodingArtifact {
    pub format: Format,
    pub text: String,
    pub varmap: VarMap,
    instance: Instance,
    /// Cells removed before emission, with their fixed hours.
    fixed: Vec<(VarTag, i64)>,
}

impl EncodingArtifact {
    fn new(ir: &ModelIR, format: Format, text: String, varmap: VarMap) -> Self {
        EncodingArtifact { format, text, varmap, instance: ir.instance().clone(), fixed: ir.eliminated.clone() }
    }

    pub fn instance(&self) -> &Instance {
        &self.instance
    }
}

/// Unique row names: the origin name, suffixed with `_2`, `_3`, ... on
/// repeats.
fn row_names(ir: &ModelIR) -> Vec<String> {
    let mut seen = HashSet::new();
    (0..ir.constraints.len())
        .map(|i| {
            let base = ir.constraint_name(i);
            let mut name = base.clone();
            let mut k = 1;
            while !seen.insert(name.clone()) {
                k += 1;
                name = format!("{base}_{k}");
            }
            name
        })
        .collect()
}

fn header(ir: &ModelIR) -> Vec<String> {
    let p = &ir.provenance;
    vec![
        format!("instance {}", if p.label.is_empty() { "-" } else { &p.label }),
        format!("config_hash {}", p.config_hash),
        format!("penalty_mode {}", ir.mode),
        format!("variables {} constraints {} soft_terms {}", ir.variables.len(), ir.constraints.len(), ir.soft_terms.len()),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build;

    /// Variables referenced by the rows and objective, for declaration checks.
    fn referenced(ir: &ModelIR) -> impl Iterator<Item = VarId> + '_ {
        ir.constraints
            .iter()
            .flat_map(|c| c.terms.iter().map(|&(_, v)| v))
            .chain(ir.soft_terms.iter().map(|t| t.realization.var()))
    }

    #[test]
    fn varmap_round_trips() {
        let inst = crate::generate::small(3);
        let ir = build(&inst);
        let map = VarMap::new(&ir);
        assert_eq!(map.len(), ir.variables.len());
        for (id, name) in map.iter() {
            assert_eq!(map.id(name), Some(id));
            assert_eq!(map.name(map.id(name).unwrap()), name);
            assert_eq!(map.tag(id), ir.var(id).tag);
        }
        assert!(referenced(&ir).all(|v| v.index() < map.len()));
    }

    #[test]
    fn row_names_are_unique() {
        let ir = build(&crate::generate::small(5));
        let names = row_names(&ir);
        assert_eq!(names.iter().collect::<HashSet<_>>().len(), names.len());
    }
}

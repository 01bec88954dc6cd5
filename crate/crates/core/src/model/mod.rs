//! Integer-linear model of an instance.
//!
//! [`build`] compiles a validated [`Instance`] into a [`ModelIR`]: declared
//! variables with bounds, hard linear constraints tagged with the equation
//! they realize, and weighted soft terms whose realization is either a 0/1
//! violation indicator or a slack variable. Implications, absolute values and
//! `min` terms are linearized here with bound-derived big-M coefficients.

mod build;
mod linearize;
pub mod names;
mod presolve;
mod stats;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::instance::{Instance, PenaltyMode, SoftFamily};

pub use build::build;
pub use linearize::{linearize_indicator, BigMOverflow, Literal, BIG_M_LIMIT};
pub use presolve::eliminate_fixed;
pub use stats::{model_stats, ModelStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VarId(pub u32);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarKind {
    Binary,
    Integer,
}

/// Index tuple a variable, constraint or soft term refers to. Positions are
/// instance positions: TA, course, and the task-kind axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Subject {
    Ta(usize),
    Course(usize),
    Pair(usize, usize),
    Task(usize, usize),
    Cell(usize, usize, usize),
}

/// Semantic name of a variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VarTag {
    /// Hours of TA on task of course.
    X { ta: usize, course: usize, kind: usize },
    /// TA teaches the task.
    Y { ta: usize, course: usize, kind: usize },
    /// TA teaches the course.
    W { ta: usize, course: usize },
    /// Total hours of a TA.
    H { ta: usize },
    /// Number of TAs on a task.
    N { course: usize, kind: usize },
    /// Number of new courses of a TA.
    Z { ta: usize },
    /// Realization of a soft term.
    Soft { family: SoftFamily, subject: Subject },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub id: VarId,
    pub kind: VarKind,
    pub lo: i64,
    pub hi: i64,
    pub tag: VarTag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl Relation {
    pub fn holds(self, lhs: i64, rhs: i64) -> bool {
        match self {
            Relation::Le => lhs <= rhs,
            Relation::Eq => lhs == rhs,
            Relation::Ge => lhs >= rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        }
    }
}

/// Which part of the formulation a constraint comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OriginTag {
    /// Equations 1-20.
    Eq(u8),
    /// `n = sum y`.
    Linking,
    /// x / y / w channeling not stated as an equation.
    Channel,
    /// Planner pin.
    Pin,
}

impl fmt::Display for OriginTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OriginTag::Eq(n) => write!(f, "Eq{n}"),
            OriginTag::Linking => f.write_str("linking"),
            OriginTag::Channel => f.write_str("channel"),
            OriginTag::Pin => f.write_str("pin"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Origin {
    pub tag: OriginTag,
    pub subject: Subject,
    /// Distinguishes several rows with the same tag and subject.
    pub part: Option<&'static str>,
}

impl Origin {
    pub fn new(tag: OriginTag, subject: Subject) -> Self {
        Origin { tag, subject, part: None }
    }

    pub fn part(mut self, part: &'static str) -> Self {
        self.part = Some(part);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LinearConstraint {
    /// `(coefficient, variable)`, no variable twice, no zero coefficient.
    pub terms: Vec<(i64, VarId)>,
    pub relation: Relation,
    pub rhs: i64,
    pub origin: Origin,
}

impl LinearConstraint {
    /// Builds a constraint, merging repeated variables and dropping zeros.
    pub fn new(terms: impl IntoIterator<Item = (i64, VarId)>, relation: Relation, rhs: i64, origin: Origin) -> Self {
        let mut merged: Vec<(i64, VarId)> = Vec::new();
        for (coef, var) in terms {
            match merged.iter_mut().find(|(_, v)| *v == var) {
                Some(slot) => slot.0 += coef,
                None => merged.push((coef, var)),
            }
        }
        merged.retain(|&(c, _)| c != 0);
        LinearConstraint { terms: merged, relation, rhs, origin }
    }

    pub fn lhs(&self, values: &[i64]) -> i64 {
        self.terms.iter().map(|&(c, v)| c * values[v.index()]).sum()
    }

    pub fn is_satisfied(&self, values: &[i64]) -> bool {
        self.relation.holds(self.lhs(values), self.rhs)
    }

    /// Smallest and largest value of the left-hand side over the given bounds.
    pub fn lhs_range(&self, bounds: impl Fn(VarId) -> (i64, i64)) -> (i64, i64) {
        let mut lo = 0;
        let mut hi = 0;
        for &(c, v) in &self.terms {
            let (vl, vh) = bounds(v);
            if c >= 0 {
                lo += c * vl;
                hi += c * vh;
            } else {
                lo += c * vh;
                hi += c * vl;
            }
        }
        (lo, hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Realization {
    /// Binary, 1 when the clause is violated; cost `weight`.
    Indicator(VarId),
    /// Non-negative excess; cost `weight` per unit.
    Slack(VarId),
}

impl Realization {
    pub fn var(self) -> VarId {
        match self {
            Realization::Indicator(v) | Realization::Slack(v) => v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SoftTerm {
    pub family: SoftFamily,
    pub subject: Subject,
    pub weight: i64,
    pub realization: Realization,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub label: String,
    /// Hash of the canonical instance document (data, bounds, weights, pins).
    pub config_hash: String,
}

/// A compiled model. The objective is always "minimize the weighted sum of
/// soft-term realizations".
#[derive(Debug, Clone)]
pub struct ModelIR {
    pub variables: Vec<Variable>,
    pub constraints: Vec<LinearConstraint>,
    pub soft_terms: Vec<SoftTerm>,
    pub provenance: Provenance,
    pub mode: PenaltyMode,
    /// Variables removed by [`eliminate_fixed`], with their fixed value.
    pub eliminated: Vec<(VarTag, i64)>,
    instance: Instance,
    by_tag: HashMap<VarTag, VarId>,
}

impl ModelIR {
    pub(crate) fn assemble(
        instance: Instance,
        variables: Vec<Variable>,
        constraints: Vec<LinearConstraint>,
        soft_terms: Vec<SoftTerm>,
        provenance: Provenance,
        eliminated: Vec<(VarTag, i64)>,
    ) -> Self {
        let by_tag = variables.iter().map(|v| (v.tag, v.id)).collect();
        ModelIR { variables, constraints, soft_terms, provenance, mode: instance.weights().penalty_mode, eliminated, instance, by_tag }
    }

    /// The instance this model was compiled from.
    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.variables[id.index()]
    }

    pub fn lookup(&self, tag: VarTag) -> Option<VarId> {
        self.by_tag.get(&tag).copied()
    }

    pub fn bounds(&self, id: VarId) -> (i64, i64) {
        let v = &self.variables[id.index()];
        (v.lo, v.hi)
    }

    /// Deterministic external name of a variable (`x_s0_c1_t3`, ...).
    pub fn var_name(&self, id: VarId) -> String {
        names::var_name(&self.instance, &self.variables[id.index()].tag)
    }

    pub fn constraint_name(&self, index: usize) -> String {
        names::origin_name(&self.instance, &self.constraints[index].origin)
    }

    /// Weighted sum of the soft realizations.
    pub fn objective(&self, values: &[i64]) -> i64 {
        self.soft_terms.iter().map(|t| t.weight * values[t.realization.var().index()]).sum()
    }

    /// Index of the first violated constraint or variable bound, if any.
    pub fn first_violation(&self, values: &[i64]) -> Option<Violation> {
        for v in &self.variables {
            let value = values[v.id.index()];
            if value < v.lo || value > v.hi {
                return Some(Violation::Bound(v.id));
            }
        }
        self.constraints.iter().position(|c| !c.is_satisfied(values)).map(Violation::Constraint)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    Bound(VarId),
    Constraint(usize),
}

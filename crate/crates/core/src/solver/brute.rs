//! Exhaustive oracle over the model rows.
//!
//! Hour vectors are enumerated task by task (every split of each covering
//! row within bounds). All other variables follow by bound propagation over
//! the rows; objective variables take their smallest admissible value.

use std::collections::VecDeque;
use std::time::Instant;

use thiserror::Error;

use crate::assignment::Assignment;
use crate::model::{LinearConstraint, ModelIR, OriginTag, Relation, VarId, VarTag};

use super::{SolveOutcome, SolveStats, Status};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("search space of {size} hour vectors exceeds the budget of {budget}")]
pub struct BudgetExceeded {
    pub size: u128,
    pub budget: u64,
}

type Bounds = Vec<(i64, i64)>;

fn floor_div(a: i64, b: i64) -> i64 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

fn ceil_div(a: i64, b: i64) -> i64 {
    -floor_div(-a, b)
}

struct Rows<'a> {
    rows: &'a [LinearConstraint],
    by_var: Vec<Vec<usize>>,
}

impl<'a> Rows<'a> {
    fn new(ir: &'a ModelIR) -> Self {
        let mut by_var = vec![Vec::new(); ir.variables.len()];
        for (i, row) in ir.constraints.iter().enumerate() {
            for &(_, v) in &row.terms {
                by_var[v.index()].push(i);
            }
        }
        Rows { rows: &ir.constraints, by_var }
    }

    /// Tightens `bounds` to a fixpoint. False if some domain empties or a
    /// row cannot be met.
    fn propagate(&self, bounds: &mut Bounds, seeds: impl IntoIterator<Item = usize>) -> bool {
        let mut queued = vec![false; self.rows.len()];
        let mut queue: VecDeque<usize> = VecDeque::new();
        for r in seeds {
            if !queued[r] {
                queued[r] = true;
                queue.push_back(r);
            }
        }
        while let Some(r) = queue.pop_front() {
            queued[r] = false;
            let row = &self.rows[r];
            let (mut min_act, mut max_act) = (0i64, 0i64);
            for &(a, v) in &row.terms {
                let (lo, hi) = bounds[v.index()];
                min_act += (a * lo).min(a * hi);
                max_act += (a * lo).max(a * hi);
            }
            let le = matches!(row.relation, Relation::Le | Relation::Eq);
            let ge = matches!(row.relation, Relation::Ge | Relation::Eq);
            if (le && min_act > row.rhs) || (ge && max_act < row.rhs) {
                return false;
            }
            for &(a, v) in &row.terms {
                let (lo, hi) = bounds[v.index()];
                let (own_min, own_max) = ((a * lo).min(a * hi), (a * lo).max(a * hi));
                let (mut new_lo, mut new_hi) = (lo, hi);
                if le {
                    let room = row.rhs - (min_act - own_min);
                    if a > 0 {
                        new_hi = new_hi.min(floor_div(room, a));
                    } else {
                        new_lo = new_lo.max(ceil_div(room, a));
                    }
                }
                if ge {
                    let need = row.rhs - (max_act - own_max);
                    if a > 0 {
                        new_lo = new_lo.max(ceil_div(need, a));
                    } else {
                        new_hi = new_hi.min(floor_div(need, a));
                    }
                }
                if new_lo > new_hi {
                    return false;
                }
                if (new_lo, new_hi) != (lo, hi) {
                    bounds[v.index()] = (new_lo, new_hi);
                    for &other in &self.by_var[v.index()] {
                        if other != r && !queued[other] {
                            queued[other] = true;
                            queue.push_back(other);
                        }
                    }
                }
            }
        }
        true
    }
}

/// Every vector over `vars` within `bounds` summing to `total`, in
/// lexicographic order.
fn splits(vars: &[VarId], bounds: &Bounds, total: i64) -> Vec<Vec<i64>> {
    fn go(i: usize, left: i64, vars: &[VarId], bounds: &Bounds, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if i == vars.len() {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        let rest_max: i64 = vars[i + 1..].iter().map(|v| bounds[v.index()].1).sum();
        let rest_min: i64 = vars[i + 1..].iter().map(|v| bounds[v.index()].0).sum();
        let (lo, hi) = bounds[vars[i].index()];
        for x in lo.max(left - rest_max)..=hi.min(left - rest_min) {
            cur.push(x);
            go(i + 1, left - x, vars, bounds, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, total, vars, bounds, &mut Vec::new(), &mut out);
    out
}

struct Plan<'a> {
    ir: &'a ModelIR,
    rows: Rows<'a>,
    root: Bounds,
    /// Covering rows as (variables, total).
    cover: Vec<(Vec<VarId>, i64)>,
    soft: Vec<bool>,
}

impl<'a> Plan<'a> {
    fn new(ir: &'a ModelIR) -> Option<Self> {
        let rows = Rows::new(ir);
        let mut root: Bounds = ir.variables.iter().map(|v| (v.lo, v.hi)).collect();
        if ir.constraints.iter().any(|r| r.terms.is_empty() && !r.relation.holds(0, r.rhs)) {
            return None;
        }
        if !rows.propagate(&mut root, 0..ir.constraints.len()) {
            return None;
        }
        let cover = ir
            .constraints
            .iter()
            .filter(|r| r.origin.tag == OriginTag::Eq(6) && r.relation == Relation::Eq && r.terms.iter().all(|&(a, _)| a == 1))
            .map(|r| (r.terms.iter().map(|&(_, v)| v).collect(), r.rhs))
            .collect();
        let mut soft = vec![false; ir.variables.len()];
        for t in &ir.soft_terms {
            soft[t.realization.var().index()] = true;
        }
        Some(Plan { ir, rows, root, cover, soft })
    }

    fn size(&self) -> u128 {
        self.cover.iter().fold(1u128, |acc, (vars, total)| acc.saturating_mul(splits(vars, &self.root, *total).len() as u128))
    }

    /// Best completion below `bounds` from covering row `i` on:
    /// `(objective, values)` and the number of nodes visited.
    fn search(&self, i: usize, bounds: &Bounds) -> (Option<(i64, Vec<i64>)>, u64) {
        if i == self.cover.len() {
            return (self.complete(bounds), 1);
        }
        let (vars, total) = &self.cover[i];
        let mut best: Option<(i64, Vec<i64>)> = None;
        let mut nodes = 1;
        for split in splits(vars, bounds, *total) {
            let (found, n) = self.try_split(i, bounds, &split);
            nodes += n;
            if let Some(found) = found {
                if best.as_ref().is_none_or(|b| found.0 < b.0) {
                    best = Some(found);
                }
            }
        }
        (best, nodes)
    }

    fn try_split(&self, i: usize, bounds: &Bounds, split: &[i64]) -> (Option<(i64, Vec<i64>)>, u64) {
        let (vars, _) = &self.cover[i];
        let mut next = bounds.clone();
        for (&v, &x) in vars.iter().zip(split) {
            next[v.index()] = (x, x);
        }
        let touched: Vec<usize> = vars.iter().flat_map(|v| self.rows.by_var[v.index()].iter().copied()).collect();
        if !self.rows.propagate(&mut next, touched) {
            return (None, 1);
        }
        self.search(i + 1, &next)
    }

    /// Cheapest completion of the remaining free variables. Soft
    /// realizations take their smallest value; anything else is enumerated.
    fn complete(&self, bounds: &Bounds) -> Option<(i64, Vec<i64>)> {
        let free = (0..bounds.len()).find(|&v| bounds[v].0 < bounds[v].1 && !self.soft[v]);
        let Some(v) = free else {
            let values: Vec<i64> = bounds.iter().map(|&(lo, _)| lo).collect();
            if self.ir.first_violation(&values).is_some() {
                return None;
            }
            return Some((self.ir.objective(&values), values));
        };
        let mut best: Option<(i64, Vec<i64>)> = None;
        for x in bounds[v].0..=bounds[v].1 {
            let mut next = bounds.clone();
            next[v] = (x, x);
            if !self.rows.propagate(&mut next, self.rows.by_var[v].iter().copied()) {
                continue;
            }
            if let Some(found) = self.complete(&next) {
                if best.as_ref().is_none_or(|b| found.0 < b.0) {
                    best = Some(found);
                }
            }
        }
        best
    }
}

/// Hour-vector count of the enumeration, after root propagation. Zero if
/// propagation alone proves infeasibility.
pub fn domain_size(ir: &ModelIR) -> u128 {
    Plan::new(ir).map_or(0, |plan| plan.size())
}

/// Enumerates every schedule of `ir` and returns a provably optimal one.
pub fn brute_force(ir: &ModelIR, budget: u64) -> Result<SolveOutcome, BudgetExceeded> {
    let start = Instant::now();
    let Some(plan) = Plan::new(ir) else {
        let stats = SolveStats { wall_time: start.elapsed().as_secs_f64(), ..Default::default() };
        return Ok(SolveOutcome::without_solution(Status::Infeasible, 0, stats));
    };
    let size = plan.size();
    if size > budget as u128 {
        return Err(BudgetExceeded { size, budget });
    }
    let (best, nodes) = if plan.cover.is_empty() {
        plan.search(0, &plan.root)
    } else {
        let (vars, total) = &plan.cover[0];
        let first = splits(vars, &plan.root, *total);
        let results = map_splits(&first, |split| plan.try_split(0, &plan.root, split));
        let mut best: Option<(i64, Vec<i64>)> = None;
        let mut nodes = 1;
        for (found, n) in results {
            nodes += n;
            if let Some(found) = found {
                if best.as_ref().is_none_or(|b| found.0 < b.0) {
                    best = Some(found);
                }
            }
        }
        (best, nodes)
    };
    let stats = SolveStats { nodes, leaves: nodes, wall_time: start.elapsed().as_secs_f64(), ..Default::default() };
    Ok(match best {
        None => SolveOutcome::without_solution(Status::Infeasible, 0, stats),
        Some((objective, values)) => SolveOutcome {
            status: Status::Optimal,
            best: Some(hours_of(ir, &values)),
            objective: Some(objective),
            lower_bound: objective,
            stats,
        },
    })
}

#[cfg(feature = "parallel")]
fn map_splits<R: Send>(splits: &[Vec<i64>], f: impl Fn(&[i64]) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    splits.par_iter().map(|s| f(s)).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_splits<R>(splits: &[Vec<i64>], f: impl Fn(&[i64]) -> R) -> Vec<R> {
    splits.iter().map(|s| f(s)).collect()
}

fn hours_of(ir: &ModelIR, values: &[i64]) -> Assignment {
    let instance = ir.instance();
    let mut a = Assignment::empty(instance);
    let x_cells = ir.variables.iter().map(|v| (v.tag, values[v.id.index()])).chain(ir.eliminated.iter().copied());
    for (tag, value) in x_cells {
        if let VarTag::X { ta, course, kind } = tag {
            a.set_hours(ta, course, kind, value);
        }
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Instance;
    use crate::model::{build, eliminate_fixed};

    fn tiny(extra: &str) -> Instance {
        Instance::from_json(&format!(
            r#"{{"tas": [{{"id": "a", "year": 1, "employment_fraction": 0, "carryover_hours": 10}}],
                "courses": [{{"id": "c", "tasks": [{{"kind": "admin", "total_hours": 10, "required_tas": 1}}]}}]{extra}}}"#
        ))
        .unwrap()
    }

    #[test]
    fn division_rounds_toward_infinities() {
        assert_eq!((floor_div(-7, 2), ceil_div(-7, 2), floor_div(7, -2), ceil_div(7, 2)), (-4, -3, -4, 4));
    }

    #[test]
    fn single_schedule() {
        let out = brute_force(&build(&tiny("")), 10).unwrap();
        assert_eq!(out.status, Status::Optimal);
        assert_eq!(out.best.unwrap().hours(0, 0, 0), 10);
        // One new course against a soft bound of 0 at weight 0.
        assert_eq!(out.objective, Some(0));
    }

    #[test]
    fn forbidden_pair_is_infeasible() {
        let inst = tiny(r#", "pairs": [{"ta": "a", "course": "c", "forbidden": true}]"#);
        assert_eq!(brute_force(&build(&inst), 10).unwrap().status, Status::Infeasible);
        assert_eq!(domain_size(&build(&inst)), 0);
    }

    #[test]
    fn two_way_split_under_minimum_hours() {
        // Lab of 4 hours, minimum 2 hours each, 2 TAs required: of the five
        // splits only (2, 2) survives.
        let inst = Instance::from_json(
            r#"{"tas": [{"id": "a", "year": 1, "employment_fraction": 0, "carryover_hours": 3},
                        {"id": "b", "year": 1, "employment_fraction": 0, "carryover_hours": 3}],
                "bounds": {"min_task_hours": 2},
                "courses": [{"id": "c", "tasks": [{"kind": "admin", "total_hours": 2, "required_tas": 1},
                                                  {"kind": "lab_session", "total_hours": 4, "required_tas": 2}]}]}"#,
        )
        .unwrap();
        let ir = build(&inst);
        let out = brute_force(&ir, 100).unwrap();
        assert_eq!(out.status, Status::Optimal);
        let best = out.best.unwrap();
        let lab = inst.kind_position(crate::instance::TaskKind::LabSession).unwrap();
        assert_eq!((best.hours(0, 0, lab), best.hours(1, 0, lab)), (2, 2));
    }

    #[test]
    fn single_owner_admin_cannot_take_two() {
        let inst = Instance::from_json(
            r#"{"tas": [{"id": "a", "year": 1, "employment_fraction": 0, "carryover_hours": 2},
                        {"id": "b", "year": 1, "employment_fraction": 0, "carryover_hours": 2}],
                "courses": [{"id": "c", "tasks": [{"kind": "admin", "total_hours": 4, "required_tas": 2}]}]}"#,
        )
        .unwrap();
        let ir = build(&inst);
        assert_eq!(domain_size(&ir), 0);
        assert_eq!(brute_force(&ir, 5).unwrap().status, Status::Infeasible);
    }

    #[test]
    fn budget_guard() {
        let inst = Instance::from_json(
            r#"{"tas": [{"id": "a", "year": 1, "employment_fraction": 0, "carryover_hours": 2},
                        {"id": "b", "year": 1, "employment_fraction": 0, "carryover_hours": 2}],
                "courses": [{"id": "c", "tasks": [{"kind": "admin", "total_hours": 12, "required_tas": 1}]}]}"#,
        )
        .unwrap();
        let err = brute_force(&build(&inst), 5).unwrap_err();
        assert_eq!(err.size, 13);
    }

    #[test]
    fn reduced_model_gives_the_same_answer() {
        let inst = Instance::from_json(
            r#"{"tas": [{"id": "a", "year": 5, "employment_fraction": 0, "carryover_hours": 8},
                        {"id": "b", "year": 1, "employment_fraction": 0, "carryover_hours": 9}],
                "courses": [{"id": "c", "tasks": [{"kind": "admin", "total_hours": 6, "required_tas": 1},
                                                  {"kind": "lab_session", "total_hours": 11, "required_tas": 2}]}],
                "pairs": [{"ta": "b", "course": "c", "preference": 1}]}"#,
        )
        .unwrap();
        let ir = build(&inst);
        let a = brute_force(&ir, 1000).unwrap();
        let b = brute_force(&eliminate_fixed(&ir), 1000).unwrap();
        assert_eq!(a.objective, b.objective);
        assert_eq!(a.status, Status::Optimal);
    }
}

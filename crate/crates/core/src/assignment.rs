//! Hours per (TA, course, task) cell. Everything else about a schedule (who
//! teaches what, totals, staffing counts, new courses) is derived from them.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::instance::Instance;
use crate::model::names::x_name;

/// A derived quantity as stated by an external solution file. Kept only so an
/// audit can flag files whose stated values disagree with their hours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Claim {
    /// Total hours of a TA.
    Total { ta: usize },
    /// TA teaches some task of the course.
    Teaches { ta: usize, course: usize },
    /// TA teaches the task.
    OnTask { ta: usize, course: usize, kind: usize },
    /// Number of TAs on the task.
    Staff { course: usize, kind: usize },
    /// Number of new courses of a TA.
    NewCourses { ta: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    n_tas: usize,
    n_courses: usize,
    n_kinds: usize,
    hours: Vec<i64>,
    #[serde(skip)]
    claims: Vec<(Claim, i64)>,
}

impl Assignment {
    /// The empty schedule shaped like `instance`.
    pub fn empty(instance: &Instance) -> Self {
        Assignment::from_hours(instance, vec![0; instance.n_cells()])
    }

    /// Wraps dense hours in `(ta, course, kind)` order.
    pub fn from_hours(instance: &Instance, hours: Vec<i64>) -> Self {
        Assignment::with_shape(instance.n_tas(), instance.n_courses(), instance.n_kinds(), hours)
    }

    /// Wraps dense hours with an explicit shape, which need not match any
    /// instance.
    pub fn with_shape(n_tas: usize, n_courses: usize, n_kinds: usize, hours: Vec<i64>) -> Self {
        Assignment { n_tas, n_courses, n_kinds, hours, claims: Vec::new() }
    }

    pub fn with_claims(mut self, claims: Vec<(Claim, i64)>) -> Self {
        self.claims = claims;
        self
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.n_tas, self.n_courses, self.n_kinds)
    }

    pub fn claims(&self) -> &[(Claim, i64)] {
        &self.claims
    }

    pub fn hours_slice(&self) -> &[i64] {
        &self.hours
    }

    fn index(&self, ta: usize, course: usize, kind: usize) -> usize {
        (ta * self.n_courses + course) * self.n_kinds + kind
    }

    pub fn hours(&self, ta: usize, course: usize, kind: usize) -> i64 {
        self.hours[self.index(ta, course, kind)]
    }

    pub fn set_hours(&mut self, ta: usize, course: usize, kind: usize, value: i64) {
        let i = self.index(ta, course, kind);
        self.hours[i] = value;
    }

    pub fn course_hours(&self, ta: usize, course: usize) -> i64 {
        (0..self.n_kinds).map(|k| self.hours(ta, course, k)).sum()
    }

    pub fn total_hours(&self, ta: usize) -> i64 {
        (0..self.n_courses).map(|c| self.course_hours(ta, c)).sum()
    }

    pub fn teaches(&self, ta: usize, course: usize) -> bool {
        (0..self.n_kinds).any(|k| self.hours(ta, course, k) > 0)
    }

    pub fn course_count(&self, ta: usize) -> usize {
        (0..self.n_courses).filter(|&c| self.teaches(ta, c)).count()
    }

    pub fn new_course_count(&self, instance: &Instance, ta: usize) -> usize {
        (0..self.n_courses).filter(|&c| self.teaches(ta, c) && !instance.pair(ta, c).taught_last_year).count()
    }

    pub fn staff(&self, course: usize, kind: usize) -> usize {
        (0..self.n_tas).filter(|&s| self.hours(s, course, kind) > 0).count()
    }

    /// Solution file text: `#` header lines followed by one `name value`
    /// line per hour cell, zeros included.
    pub fn to_solution_text(&self, instance: &Instance, header: &[(&str, String)]) -> String {
        let mut out = String::new();
        for (key, value) in header {
            let _ = writeln!(out, "# {key} {value}");
        }
        for s in 0..self.n_tas {
            for c in 0..self.n_courses {
                for (k, kind) in instance.kinds().iter().enumerate() {
                    let _ = writeln!(out, "{} {}", x_name(s, c, kind.code()), self.hours(s, c, k));
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_quantities_follow_hours() {
        let inst = Instance::from_json(
            r#"{"tas": [{"id": "a", "year": 1, "employment_fraction": 0, "carryover_hours": 10}],
                "courses": [{"id": "c", "tasks": [{"kind": "admin", "total_hours": 10, "required_tas": 1}]}]}"#,
        )
        .unwrap();
        let mut a = Assignment::empty(&inst);
        assert!(!a.teaches(0, 0));
        a.set_hours(0, 0, 0, 10);
        assert_eq!((a.total_hours(0), a.course_count(0), a.new_course_count(&inst, 0), a.staff(0, 0)), (10, 1, 1, 1));
        let text = a.to_solution_text(&inst, &[("status", "optimal".into())]);
        assert_eq!(text, "# status optimal\nx_s0_c0_t0 10\n");
    }
}

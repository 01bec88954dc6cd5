//! Independent audit of a schedule against an instance.
//!
//! Every quantity is recomputed from the hours alone, straight from the
//! instance data. Nothing here goes through the compiled model.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::assignment::{Assignment, Claim};
use crate::instance::{Instance, PenaltyMode, PinTarget, SoftFamily, TaskKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckMode {
    /// Fail on any hard violation.
    Strict,
    /// Report everything.
    Audit,
}

/// Identifies what a violation is about, by external ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Location {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ta: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub course: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub task: Option<TaskKind>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HardViolation {
    /// `Eq1` ... `Eq13`, `linking` or `pin`.
    pub equation: String,
    pub location: Location,
    pub measured: i64,
    /// The bound the measured value should satisfy, read with `relation`.
    pub relation: &'static str,
    pub bound: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub hard_violations: Vec<HardViolation>,
    pub soft_penalty_by_family: BTreeMap<SoftFamily, i64>,
    /// Number of violated clauses per family, whatever the weights.
    pub soft_violations_by_family: BTreeMap<SoftFamily, i64>,
    pub total_objective: i64,
    pub strict_ok: bool,
}

impl Verdict {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("verdict serializes")
    }
}

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("assignment shape {found:?} does not match instance shape {expected:?}")]
    IndexMismatch { expected: (usize, usize, usize), found: (usize, usize, usize) },
    #[error("{} hard violation(s), first: {} at {:?}", .0.hard_violations.len(), .0.hard_violations[0].equation, .0.hard_violations[0].location)]
    HardViolation(Box<Verdict>),
}

struct Audit<'a> {
    instance: &'a Instance,
    hours: &'a Assignment,
    violations: Vec<HardViolation>,
}

impl Audit<'_> {
    fn location(&self, ta: Option<usize>, course: Option<usize>, kind: Option<usize>) -> Location {
        Location {
            ta: ta.map(|s| self.instance.tas()[s].id.clone()),
            course: course.map(|c| self.instance.courses()[c].id.clone()),
            task: kind.map(|k| self.instance.kinds()[k]),
        }
    }

    fn flag(&mut self, equation: &str, at: (Option<usize>, Option<usize>, Option<usize>), measured: i64, relation: &'static str, bound: i64) {
        let location = self.location(at.0, at.1, at.2);
        self.violations.push(HardViolation { equation: equation.to_string(), location, measured, relation, bound });
    }

    fn x(&self, s: usize, c: usize, k: usize) -> i64 {
        self.hours.hours(s, c, k)
    }

    fn taught(&self, s: usize, c: usize) -> bool {
        (0..self.instance.n_kinds()).any(|k| self.x(s, c, k) > 0)
    }

    fn total(&self, s: usize) -> i64 {
        (0..self.instance.n_courses()).flat_map(|c| (0..self.instance.n_kinds()).map(move |k| (c, k))).map(|(c, k)| self.x(s, c, k)).sum()
    }

    fn courses(&self, s: usize) -> i64 {
        (0..self.instance.n_courses()).filter(|&c| self.taught(s, c)).count() as i64
    }

    fn new_courses(&self, s: usize) -> i64 {
        (0..self.instance.n_courses()).filter(|&c| self.taught(s, c) && !self.instance.pair(s, c).taught_last_year).count() as i64
    }

    fn staff(&self, c: usize, k: usize) -> i64 {
        (0..self.instance.n_tas()).filter(|&s| self.x(s, c, k) > 0).count() as i64
    }

    fn hard(&mut self) {
        let inst = self.instance;
        let b = *inst.bounds();
        let (n_s, n_c, n_k) = (inst.n_tas(), inst.n_courses(), inst.n_kinds());
        let admin = inst.kinds().iter().position(|&k| k == TaskKind::Admin);

        for s in 0..n_s {
            for c in 0..n_c {
                if inst.pair(s, c).forbidden {
                    let on_pair: i64 = (0..n_k).map(|k| self.x(s, c, k)).sum();
                    if on_pair != 0 {
                        self.flag("Eq1", (Some(s), Some(c), None), on_pair, "=", 0);
                    }
                }
                for k in 0..n_k {
                    let x = self.x(s, c, k);
                    let tau = inst.task_hours(c, k);
                    if tau == 0 && x != 0 {
                        self.flag("Eq5", (Some(s), Some(c), Some(k)), x, "=", 0);
                        continue;
                    }
                    let least = tau.min(b.min_task_hours);
                    if x < 0 {
                        self.flag("Eq7", (Some(s), Some(c), Some(k)), x, ">=", 0);
                    } else if x > 0 && x < least {
                        self.flag("Eq7", (Some(s), Some(c), Some(k)), x, ">=", least);
                    } else if x > tau {
                        self.flag("Eq7", (Some(s), Some(c), Some(k)), x, "<=", tau);
                    }
                }
            }
        }

        for c in 0..n_c {
            for k in 0..n_k {
                let tau = inst.task_hours(c, k);
                if tau == 0 {
                    continue;
                }
                let covered: i64 = (0..n_s).map(|s| self.x(s, c, k)).sum();
                if covered != tau {
                    self.flag("Eq6", (None, Some(c), Some(k)), covered, "=", tau);
                }
                let staff = self.staff(c, k);
                let rho = inst.required_tas(c, k);
                if staff < rho {
                    self.flag("Eq8", (None, Some(c), Some(k)), staff, ">=", rho);
                }
                if Some(k) == admin && staff > 1 {
                    self.flag("Eq13", (None, Some(c), Some(k)), staff, "<=", 1);
                }
            }
        }

        for s in 0..n_s {
            let dev = (self.total(s) - inst.target(s)).abs();
            if dev > b.hard_dev {
                self.flag("Eq9", (Some(s), None, None), dev, "<=", b.hard_dev);
            }
            let courses = self.courses(s);
            if courses > b.hard_courses_per_ta {
                self.flag("Eq10", (Some(s), None, None), courses, "<=", b.hard_courses_per_ta);
            }
            let fresh = self.new_courses(s);
            if fresh > b.hard_new_courses {
                self.flag("Eq12", (Some(s), None, None), fresh, "<=", b.hard_new_courses);
            }
        }

        for c in 0..n_c {
            let tas = (0..n_s).filter(|&s| self.taught(s, c)).count() as i64;
            if tas > b.hard_tas_per_course {
                self.flag("Eq11", (None, Some(c), None), tas, "<=", b.hard_tas_per_course);
            }
        }

        for pin in inst.pins() {
            match pin.target {
                PinTarget::Course => {
                    if !self.taught(pin.ta, pin.course) {
                        self.flag("pin", (Some(pin.ta), Some(pin.course), None), 0, "=", 1);
                    }
                }
                PinTarget::Hours { kind, hours } => {
                    let x = self.x(pin.ta, pin.course, kind);
                    if x != hours {
                        self.flag("pin", (Some(pin.ta), Some(pin.course), Some(kind)), x, "=", hours);
                    }
                }
            }
        }

        for &(claim, stated) in self.hours.claims() {
            let (equation, at, actual) = match claim {
                Claim::Total { ta } => ("Eq2", (Some(ta), None, None), self.total(ta)),
                Claim::Teaches { ta, course } => ("Eq3", (Some(ta), Some(course), None), self.taught(ta, course) as i64),
                Claim::OnTask { ta, course, kind } => {
                    ("Eq3", (Some(ta), Some(course), Some(kind)), (self.x(ta, course, kind) > 0) as i64)
                }
                Claim::NewCourses { ta } => ("Eq4", (Some(ta), None, None), self.new_courses(ta)),
                Claim::Staff { course, kind } => ("linking", (None, Some(course), Some(kind)), self.staff(course, kind)),
            };
            if stated != actual {
                self.flag(equation, at, stated, "=", actual);
            }
        }
    }

    /// `(family, violated, excess)` for every soft clause.
    fn soft(&self) -> Vec<(SoftFamily, bool, i64)> {
        let inst = self.instance;
        let b = *inst.bounds();
        let mut out = Vec::new();
        let mut clause = |family, excess: i64| out.push((family, excess > 0, excess.max(0)));
        for (s, ta) in inst.tas().iter().enumerate() {
            if ta.year >= 5 {
                clause(SoftFamily::TargetFifthYear, (self.total(s) - inst.target(s)).abs());
            }
        }
        for s in 0..inst.n_tas() {
            clause(SoftFamily::SoftDeviation, (self.total(s) - inst.target(s)).abs() - b.soft_dev);
        }
        for s in 0..inst.n_tas() {
            clause(SoftFamily::SoftNewCourses, self.new_courses(s) - b.soft_new_courses);
        }
        for c in 0..inst.n_courses() {
            for k in 0..inst.n_kinds() {
                if inst.task_hours(c, k) > 0 {
                    clause(SoftFamily::SoftStaffing, self.staff(c, k) - inst.required_tas(c, k) - b.soft_extra_tas_per_task);
                }
            }
        }
        for s in 0..inst.n_tas() {
            clause(SoftFamily::SoftCourses, self.courses(s) - b.soft_courses_per_ta);
        }
        for s in 0..inst.n_tas() {
            for c in 0..inst.n_courses() {
                if inst.pair(s, c).preference > 0 {
                    clause(SoftFamily::PreferencePositive, 1 - self.taught(s, c) as i64);
                }
            }
        }
        for s in 0..inst.n_tas() {
            for c in 0..inst.n_courses() {
                if inst.pair(s, c).preference < 0 {
                    clause(SoftFamily::PreferenceNegative, self.taught(s, c) as i64);
                }
            }
        }
        out
    }
}

fn ensure_shape(instance: &Instance, assignment: &Assignment) -> Result<(), VerifyError> {
    let expected = (instance.n_tas(), instance.n_courses(), instance.n_kinds());
    let found = assignment.shape();
    if expected != found || assignment.hours_slice().len() != instance.n_cells() {
        return Err(VerifyError::IndexMismatch { expected, found });
    }
    Ok(())
}

fn zero_map() -> BTreeMap<SoftFamily, i64> {
    SoftFamily::ALL.iter().map(|&f| (f, 0)).collect()
}

fn tally(audit: &Audit<'_>, mode: PenaltyMode) -> (BTreeMap<SoftFamily, i64>, BTreeMap<SoftFamily, i64>) {
    let weights = audit.instance.weights();
    let mut penalty = zero_map();
    let mut count = zero_map();
    for (family, violated, excess) in audit.soft() {
        let units = match mode {
            PenaltyMode::Indicator => violated as i64,
            PenaltyMode::Magnitude => excess,
        };
        *penalty.get_mut(&family).unwrap() += weights.weight(family) * units;
        *count.get_mut(&family).unwrap() += violated as i64;
    }
    (penalty, count)
}

/// Per-family soft penalty under `mode`. Every family is present.
pub fn score_soft(instance: &Instance, assignment: &Assignment, mode: PenaltyMode) -> Result<BTreeMap<SoftFamily, i64>, VerifyError> {
    ensure_shape(instance, assignment)?;
    let audit = Audit { instance, hours: assignment, violations: Vec::new() };
    Ok(tally(&audit, mode).0)
}

/// Audits `assignment` against every hard rule and scores the soft ones
/// under the instance's penalty mode.
pub fn check(instance: &Instance, assignment: &Assignment, mode: CheckMode) -> Result<Verdict, VerifyError> {
    ensure_shape(instance, assignment)?;
    let mut audit = Audit { instance, hours: assignment, violations: Vec::new() };
    audit.hard();
    let (soft_penalty_by_family, soft_violations_by_family) = tally(&audit, instance.weights().penalty_mode);
    let verdict = Verdict {
        strict_ok: audit.violations.is_empty(),
        hard_violations: audit.violations,
        total_objective: soft_penalty_by_family.values().sum(),
        soft_penalty_by_family,
        soft_violations_by_family,
    };
    if mode == CheckMode::Strict && !verdict.strict_ok {
        return Err(VerifyError::HardViolation(Box::new(verdict)));
    }
    Ok(verdict)
}

/// Hard rules the pins break on their own, whatever else gets scheduled:
/// rules that more hours can only make worse. Empty does not mean the pins
/// are satisfiable.
pub fn pin_conflicts(instance: &Instance) -> Vec<HardViolation> {
    let (n_s, n_c) = (instance.n_tas(), instance.n_courses());
    let b = instance.bounds();
    let mut pinned = Assignment::empty(instance);
    let mut taught = vec![false; n_s * n_c];
    for pin in instance.pins() {
        taught[pin.ta * n_c + pin.course] = true;
        if let PinTarget::Hours { kind, hours } = pin.target {
            pinned.set_hours(pin.ta, pin.course, kind, hours);
            taught[pin.ta * n_c + pin.course] = hours > 0;
        }
    }
    let mut audit = Audit { instance, hours: &pinned, violations: Vec::new() };
    audit.hard();
    let mut found: Vec<HardViolation> = std::mem::take(&mut audit.violations)
        .into_iter()
        .filter(|v| match v.equation.as_str() {
            "Eq5" | "Eq7" | "Eq13" => true,
            "Eq6" => v.measured > v.bound,
            "Eq9" => v.location.ta.as_deref().and_then(|id| instance.ta_position(id)).is_some_and(|s| pinned.total_hours(s) > instance.target(s)),
            _ => false,
        })
        .collect();
    for s in 0..n_s {
        let mine: Vec<usize> = (0..n_c).filter(|&c| taught[s * n_c + c]).collect();
        for &c in &mine {
            if instance.pair(s, c).forbidden {
                audit.flag("Eq1", (Some(s), Some(c), None), 1, "=", 0);
            }
        }
        let fresh = mine.iter().filter(|&&c| !instance.pair(s, c).taught_last_year).count() as i64;
        if mine.len() as i64 > b.hard_courses_per_ta {
            audit.flag("Eq10", (Some(s), None, None), mine.len() as i64, "<=", b.hard_courses_per_ta);
        }
        if fresh > b.hard_new_courses {
            audit.flag("Eq12", (Some(s), None, None), fresh, "<=", b.hard_new_courses);
        }
    }
    for c in 0..n_c {
        let tas = (0..n_s).filter(|&s| taught[s * n_c + c]).count() as i64;
        if tas > b.hard_tas_per_course {
            audit.flag("Eq11", (None, Some(c), None), tas, "<=", b.hard_tas_per_course);
        }
    }
    found.append(&mut audit.violations);
    found
}

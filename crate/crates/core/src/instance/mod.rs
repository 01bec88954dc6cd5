//! Problem instances: teaching assistants, courses with their tasks, per-pair
//! data (preferences, exclusions, history), bounds and soft weights.
//!
//! An [`Instance`] is always validated. It is produced from an
//! [`InstanceFile`] (the JSON document) and can be turned back into one; the
//! round trip is lossless after canonicalization (sorted pairs, tasks ordered
//! by kind, absent tasks dropped, all bounds and weights spelled out).

mod capacity;
mod config;
mod edit;
mod file;

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use capacity::{capacity_report, CapacityReport};
pub use config::{BoundConfig, PenaltyMode, SoftFamily, WeightConfig};
pub use edit::{apply_edit, apply_edits, Edit, EditError, EditKind};
pub use file::{BoundsFile, CourseFile, InstanceFile, PairFile, PinFile, TaFile, TaskFile, WeightsFile};

/// Hours of a 100% appointment when nothing else is configured.
pub const DEFAULT_ANNUAL_FULL_LOAD: i64 = 350;

/// The ten task kinds a course may contain. `Admin` is the distinguished
/// course-administration task that every course has exactly once.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Admin,
    ExerciseSession,
    ProblemSolvingSession,
    LabSession,
    ComputerSession,
    AssignmentSupervision,
    AssignmentEvaluation,
    ProjectSupervision,
    ExamEvaluation,
    Other,
}

impl TaskKind {
    pub const ALL: [TaskKind; 10] = [
        TaskKind::Admin,
        TaskKind::ExerciseSession,
        TaskKind::ProblemSolvingSession,
        TaskKind::LabSession,
        TaskKind::ComputerSession,
        TaskKind::AssignmentSupervision,
        TaskKind::AssignmentEvaluation,
        TaskKind::ProjectSupervision,
        TaskKind::ExamEvaluation,
        TaskKind::Other,
    ];

    /// Stable position of the kind in [`TaskKind::ALL`]; used in variable names.
    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(code: usize) -> Option<TaskKind> {
        TaskKind::ALL.get(code).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Admin => "admin",
            TaskKind::ExerciseSession => "exercise_session",
            TaskKind::ProblemSolvingSession => "problem_solving_session",
            TaskKind::LabSession => "lab_session",
            TaskKind::ComputerSession => "computer_session",
            TaskKind::AssignmentSupervision => "assignment_supervision",
            TaskKind::AssignmentEvaluation => "assignment_evaluation",
            TaskKind::ProjectSupervision => "project_supervision",
            TaskKind::ExamEvaluation => "exam_evaluation",
            TaskKind::Other => "other",
        }
    }

    pub fn parse(name: &str) -> Option<TaskKind> {
        TaskKind::ALL.into_iter().find(|k| k.name() == name)
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An exact non-negative decimal fraction, e.g. an employment fraction of 0.15.
///
/// Stored as a reduced `num / den` so that `0.15 * 350 = 52.5` is computed
/// exactly instead of through binary floating point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fraction {
    num: u64,
    den: u64,
}

impl Fraction {
    pub const ZERO: Fraction = Fraction { num: 0, den: 1 };
    pub const ONE: Fraction = Fraction { num: 1, den: 1 };

    pub fn new(num: u64, den: u64) -> Option<Fraction> {
        if den == 0 {
            return None;
        }
        let g = gcd(num, den);
        Some(Fraction { num: num / g, den: den / g })
    }

    /// Reads the shortest decimal representation of `value` exactly.
    /// Negative, non-finite or overly precise (more than 12 decimals) values
    /// are rejected.
    pub fn from_decimal(value: f64) -> Option<Fraction> {
        if !value.is_finite() || value < 0.0 {
            return None;
        }
        let text = format!("{value}");
        let (int_part, frac_part) = match text.split_once('.') {
            Some((i, f)) => (i, f),
            None => (text.as_str(), ""),
        };
        if frac_part.len() > 12 || int_part.len() > 6 {
            return None;
        }
        let den = 10u64.pow(frac_part.len() as u32);
        let int: u64 = int_part.parse().ok()?;
        let frac: u64 = if frac_part.is_empty() { 0 } else { frac_part.parse().ok()? };
        Fraction::new(int * den + frac, den)
    }

    pub fn numerator(self) -> u64 {
        self.num
    }

    pub fn denominator(self) -> u64 {
        self.den
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn is_within_unit(self) -> bool {
        self.num <= self.den
    }

    /// `round_half_up(self * hours)` for non-negative `hours`.
    pub fn scale_round_half_up(self, hours: i64) -> i64 {
        let hours = hours.max(0) as u128;
        let num = self.num as u128;
        let den = self.den as u128;
        ((2 * num * hours + den) / (2 * den)) as i64
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

/// Target workload for the year: the employment fraction of the full annual
/// load, rounded half-up to whole hours, plus the hours carried over from
/// previous years.
pub fn compute_target(employment_fraction: Fraction, carryover: i64, annual_full_load: i64) -> i64 {
    employment_fraction.scale_round_half_up(annual_full_load) + carryover
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TeachingAssistant {
    pub id: String,
    /// Academic year of the appointment, 1 to 5.
    pub year: u8,
    pub employment_fraction: Fraction,
    pub carryover_hours: i64,
    /// Derived: [`compute_target`] of the three fields above.
    pub target_hours: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CourseTask {
    pub kind: TaskKind,
    pub total_hours: i64,
    pub required_tas: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Course {
    pub id: String,
    /// Present tasks only (`total_hours > 0`), ordered by kind.
    pub tasks: Vec<CourseTask>,
}

/// Per (TA, course) data. Pairs not listed in a file take the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PairData {
    pub preference: i8,
    pub forbidden: bool,
    pub taught_last_year: bool,
}

impl PairData {
    pub fn is_default(&self) -> bool {
        *self == PairData::default()
    }
}

/// A planner decision fixed as a hard constraint: either a TA teaches a
/// course (any hours) or a TA teaches exactly `hours` of one task.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pin {
    pub ta: usize,
    pub course: usize,
    pub target: PinTarget,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PinTarget {
    Course,
    Hours { kind: usize, hours: i64 },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{path}: {message}")]
pub struct ValidationError {
    pub path: String,
    pub message: String,
}

impl ValidationError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        ValidationError { path: path.into(), message: message.into() }
    }
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("validation error: {0}")]
    Validation(#[from] ValidationError),
}

/// A validated problem instance. Immutable; share freely.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    label: String,
    tas: Vec<TeachingAssistant>,
    courses: Vec<Course>,
    bounds: BoundConfig,
    weights: WeightConfig,
    pins: Vec<Pin>,
    /// Task kinds present in at least one course, ordered by kind; this is the
    /// task axis of every (TA, course, task) array.
    kinds: Vec<TaskKind>,
    /// Dense `|S| x |C|` pair table.
    pairs: Vec<PairData>,
    /// Dense `|C| x |kinds|` (hours, required TAs).
    task_table: Vec<(i64, i64)>,
    ta_index: HashMap<String, usize>,
    course_index: HashMap<String, usize>,
}

impl Instance {
    pub fn load(path: impl AsRef<Path>) -> Result<Instance, LoadError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| LoadError::Io { path: path.display().to_string(), source })?;
        Instance::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Instance, LoadError> {
        let file: InstanceFile = serde_json::from_str(text)?;
        Ok(Instance::from_file(file)?)
    }

    /// Canonical pretty-printed JSON.
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(&self.to_file()).expect("instance serializes");
        text.push('\n');
        text
    }

    pub fn save(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        std::fs::write(path, self.to_json())
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn tas(&self) -> &[TeachingAssistant] {
        &self.tas
    }

    pub fn courses(&self) -> &[Course] {
        &self.courses
    }

    pub fn bounds(&self) -> &BoundConfig {
        &self.bounds
    }

    pub fn weights(&self) -> &WeightConfig {
        &self.weights
    }

    pub fn pins(&self) -> &[Pin] {
        &self.pins
    }

    pub fn kinds(&self) -> &[TaskKind] {
        &self.kinds
    }

    pub fn n_tas(&self) -> usize {
        self.tas.len()
    }

    pub fn n_courses(&self) -> usize {
        self.courses.len()
    }

    pub fn n_kinds(&self) -> usize {
        self.kinds.len()
    }

    pub fn ta_position(&self, id: &str) -> Option<usize> {
        self.ta_index.get(id).copied()
    }

    pub fn course_position(&self, id: &str) -> Option<usize> {
        self.course_index.get(id).copied()
    }

    pub fn kind_position(&self, kind: TaskKind) -> Option<usize> {
        self.kinds.iter().position(|&k| k == kind)
    }

    /// Index of the admin kind on the task axis. Every valid instance with at
    /// least one course has it.
    pub fn admin_position(&self) -> Option<usize> {
        self.kind_position(TaskKind::Admin)
    }

    pub fn target(&self, ta: usize) -> i64 {
        self.tas[ta].target_hours
    }

    pub fn pair(&self, ta: usize, course: usize) -> PairData {
        self.pairs[ta * self.courses.len() + course]
    }

    /// Total hours of task `kind` (axis position) in `course`; 0 when absent.
    pub fn task_hours(&self, course: usize, kind: usize) -> i64 {
        self.task_table[course * self.kinds.len() + kind].0
    }

    pub fn required_tas(&self, course: usize, kind: usize) -> i64 {
        self.task_table[course * self.kinds.len() + kind].1
    }

    /// `min(total_hours, min_task_hours)`: the fewest hours a TA may teach
    /// on a task they are assigned to.
    pub fn min_hours(&self, course: usize, kind: usize) -> i64 {
        self.task_hours(course, kind).min(self.bounds.min_task_hours)
    }

    /// Number of (TA, course, task) cells.
    pub fn n_cells(&self) -> usize {
        self.tas.len() * self.courses.len() * self.kinds.len()
    }

    pub fn cell(&self, ta: usize, course: usize, kind: usize) -> usize {
        (ta * self.courses.len() + course) * self.kinds.len() + kind
    }

    pub fn total_demand(&self) -> i64 {
        self.task_table.iter().map(|&(h, _)| h).sum()
    }

    /// Returns a copy with different weights (used by sweeps and tests).
    pub fn with_weights(&self, weights: WeightConfig) -> Instance {
        let mut copy = self.clone();
        copy.weights = weights;
        copy
    }

    pub fn with_bounds(&self, bounds: BoundConfig) -> Result<Instance, ValidationError> {
        bounds.validate("bounds")?;
        let mut file = self.to_file();
        file.bounds = BoundsFile::from_config(&bounds);
        Instance::from_file(file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_json(fraction: &str, preference: &str) -> String {
        format!(
            r#"{{
  "label": "minimal",
  "tas": [{{"id": "a", "year": 1, "employment_fraction": {fraction}, "carryover_hours": 0}}],
  "courses": [{{"id": "c", "tasks": [{{"kind": "admin", "total_hours": 10, "required_tas": 1}}]}}],
  "pairs": [{{"ta": "a", "course": "c", "preference": {preference}}}]
}}"#
        )
    }

    #[test]
    fn minimal_file_loads_with_full_target() {
        let inst = Instance::from_json(&minimal_json("1.0", "0")).unwrap();
        assert_eq!(inst.target(0), 350);
        assert_eq!(inst.kinds(), &[TaskKind::Admin]);
        assert_eq!(inst.task_hours(0, 0), 10);
        assert_eq!(inst.n_cells(), 1);
    }

    #[test]
    fn fraction_above_one_is_rejected() {
        let err = Instance::from_json(&minimal_json("1.2", "0")).unwrap_err();
        match err {
            LoadError::Validation(e) => {
                assert_eq!(e.path, "tas[0].employment_fraction");
                assert_eq!(e.message, "employment_fraction out of [0,1]");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn preference_out_of_range_is_rejected() {
        let err = Instance::from_json(&minimal_json("1.0", "2")).unwrap_err();
        match err {
            LoadError::Validation(e) => assert_eq!(e.message, "preference must be in {-1,0,1}"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn malformed_json_is_a_parse_error() {
        assert!(matches!(Instance::from_json("{ not json"), Err(LoadError::Parse(_))));
    }

    #[test]
    fn target_examples() {
        assert_eq!(compute_target(Fraction::ONE, 0, 350), 350);
        assert_eq!(compute_target(Fraction::new(1, 2).unwrap(), -20, 350), 155);
        // 0.15 * 350 = 52.5 rounds up.
        assert_eq!(compute_target(Fraction::from_decimal(0.15).unwrap(), 0, 350), 53);
        assert_eq!(compute_target(Fraction::from_decimal(0.1).unwrap(), 0, 350), 35);
        assert_eq!(compute_target(Fraction::ZERO, 10, 350), 10);
    }

    #[test]
    fn decimal_fractions_are_exact() {
        let f = Fraction::from_decimal(0.15).unwrap();
        assert_eq!((f.numerator(), f.denominator()), (3, 20));
        assert_eq!(Fraction::from_decimal(1.0).unwrap(), Fraction::ONE);
        assert!(Fraction::from_decimal(-0.5).is_none());
        assert!(Fraction::from_decimal(f64::NAN).is_none());
        assert_eq!(Fraction::from_decimal(f.to_f64()).unwrap(), f);
    }

    #[test]
    fn task_kind_codes_round_trip() {
        for kind in TaskKind::ALL {
            assert_eq!(TaskKind::from_code(kind.code()), Some(kind));
            assert_eq!(TaskKind::parse(kind.name()), Some(kind));
        }
    }
}

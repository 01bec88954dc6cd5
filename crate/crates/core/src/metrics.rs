//! Evaluation artifacts: deviation RMSE, assigned-versus-target scatter
//! series, course and new-course histograms, and comparison tables across
//! solvers and manual schedules.
//!
//! Everything here is data. Rendering is left to whatever consumes the JSON
//! and CSV output.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assignment::Assignment;
use crate::instance::Instance;
use crate::solver::{SolveOutcome, Status};
use crate::verify::{check, CheckMode, VerifyError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RmseError {
    #[error("{targets} targets but {assigned} assigned totals")]
    LengthMismatch { targets: usize, assigned: usize },
    #[error("no values to compare")]
    Empty,
}

/// Root mean squared difference between assigned and target hours.
pub fn rmse(targets: &[i64], assigned: &[i64]) -> Result<f64, RmseError> {
    if targets.len() != assigned.len() {
        return Err(RmseError::LengthMismatch { targets: targets.len(), assigned: assigned.len() });
    }
    if targets.is_empty() {
        return Err(RmseError::Empty);
    }
    let squares: i128 = targets.iter().zip(assigned).map(|(&t, &a)| ((a - t) as i128).pow(2)).sum();
    Ok((squares as f64 / targets.len() as f64).sqrt())
}

/// Where a schedule came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Source {
    Solver { name: String, status: Status, seconds: f64 },
    Manual,
}

impl Source {
    /// Solver source describing `outcome`.
    pub fn from_outcome(name: impl Into<String>, outcome: &SolveOutcome) -> Self {
        Source::Solver { name: name.into(), status: outcome.status, seconds: outcome.stats.wall_time }
    }

    pub fn name(&self) -> &str {
        match self {
            Source::Solver { name, .. } => name,
            Source::Manual => "manual",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub ta: String,
    pub target: i64,
    pub assigned: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub label: String,
    pub source: Source,
    pub rmse: f64,
    /// One point per TA, in instance order.
    pub scatter: Vec<ScatterPoint>,
    /// Number of courses taught mapped to the TAs teaching that many.
    pub course_histogram: BTreeMap<usize, Vec<String>>,
    /// Number of new courses mapped to the TAs with that many.
    pub new_course_histogram: BTreeMap<usize, Vec<String>>,
    /// Hard violations found by an audit of the schedule.
    pub hard_violations: usize,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn targets(&self) -> Vec<i64> {
        self.scatter.iter().map(|p| p.target).collect()
    }

    /// `ta,target,assigned` rows.
    pub fn scatter_csv(&self) -> String {
        let mut out = String::from("ta,target,assigned\n");
        for p in &self.scatter {
            let _ = writeln!(out, "{},{},{}", csv_field(&p.ta), p.target, p.assigned);
        }
        out
    }

    /// `histogram,count,tas` rows for both histograms.
    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("histogram,count,tas\n");
        for (name, hist) in [("courses", &self.course_histogram), ("new_courses", &self.new_course_histogram)] {
            for (count, tas) in hist {
                let _ = writeln!(out, "{name},{count},{}", tas.len());
            }
        }
        out
    }
}

/// Audits `assignment` and summarizes it.
pub fn build_report(instance: &Instance, assignment: &Assignment, source: Source) -> Result<Report, VerifyError> {
    let verdict = check(instance, assignment, CheckMode::Audit)?;
    let mut scatter = Vec::with_capacity(instance.n_tas());
    let mut course_histogram: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    let mut new_course_histogram: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for (s, ta) in instance.tas().iter().enumerate() {
        scatter.push(ScatterPoint { ta: ta.id.clone(), target: instance.target(s), assigned: assignment.total_hours(s) });
        course_histogram.entry(assignment.course_count(s)).or_default().push(ta.id.clone());
        new_course_histogram.entry(assignment.new_course_count(instance, s)).or_default().push(ta.id.clone());
    }
    let targets: Vec<i64> = scatter.iter().map(|p| p.target).collect();
    let assigned: Vec<i64> = scatter.iter().map(|p| p.assigned).collect();
    Ok(Report {
        label: instance.label().to_string(),
        source,
        rmse: rmse(&targets, &assigned).unwrap_or(0.0),
        scatter,
        course_histogram,
        new_course_histogram,
        hard_violations: verdict.hard_violations.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompareError {
    #[error("nothing to compare")]
    Empty,
    #[error("report for {found:?} does not belong to instance {expected:?}")]
    LabelMismatch { expected: String, found: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub source: String,
    /// Solver status, absent for manual schedules.
    pub status: Option<Status>,
    pub rmse: f64,
    /// Solve time, absent for manual schedules.
    pub seconds: Option<f64>,
    pub hard_violations: usize,
}

/// One row per report, in the order given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub label: String,
    pub rows: Vec<ComparisonRow>,
}

const COLUMNS: [&str; 5] = ["source", "status", "rmse", "time_s", "hard_violations"];

impl Comparison {
    fn cells(&self) -> Vec<[String; 5]> {
        self.rows
            .iter()
            .map(|r| {
                [
                    r.source.clone(),
                    r.status.map_or("-".into(), |s| s.to_string()),
                    format!("{:.2}", r.rmse),
                    r.seconds.map_or("-".into(), |t| format!("{t:.2}")),
                    r.hard_violations.to_string(),
                ]
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = COLUMNS.join(",");
        out.push('\n');
        for row in self.cells() {
            let fields: Vec<String> = row.iter().map(|f| csv_field(f)).collect();
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }

    /// Fixed-width table, text left-aligned and numbers right-aligned.
    pub fn to_text(&self) -> String {
        let cells = self.cells();
        let mut width = COLUMNS.map(str::len);
        for row in &cells {
            for (w, f) in width.iter_mut().zip(row) {
                *w = (*w).max(f.chars().count());
            }
        }
        let line = |fields: [&str; 5]| {
            let parts: Vec<String> = fields
                .iter()
                .enumerate()
                .map(|(i, f)| if i < 2 { format!("{f:<w$}", w = width[i]) } else { format!("{f:>w$}", w = width[i]) })
                .collect();
            parts.join("  ").trim_end().to_string() + "\n"
        };
        let mut out = line(COLUMNS);
        for row in &cells {
            out.push_str(&line([&row[0], &row[1], &row[2], &row[3], &row[4]]));
        }
        out
    }
}

/// Side-by-side table of reports on the same instance.
pub fn compare(reports: &[Report]) -> Result<Comparison, CompareError> {
    let first = reports.first().ok_or(CompareError::Empty)?;
    let mut rows = Vec::with_capacity(reports.len());
    for r in reports {
        if r.label != first.label {
            return Err(CompareError::LabelMismatch { expected: first.label.clone(), found: r.label.clone() });
        }
        let (status, seconds) = match &r.source {
            Source::Solver { status, seconds, .. } => (Some(*status), Some(*seconds)),
            Source::Manual => (None, None),
        };
        rows.push(ComparisonRow { source: r.source.name().to_string(), status, rmse: r.rmse, seconds, hard_violations: r.hard_violations });
    }
    Ok(Comparison { label: first.label.clone(), rows })
}

fn csv_field(text: &str) -> String {
    if text.contains([',', '"', '\n']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

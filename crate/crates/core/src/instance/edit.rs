//! Planner edits. Every edit is applied to the instance document and the
//! result is re-validated, so an edited instance obeys the same invariants as
//! a loaded one and `instance + edits` always rebuilds the same model.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Instance, PairFile, PinFile, SoftFamily, TaskKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EditKind {
    PinHours { ta: String, course: String, task: TaskKind, hours: i64 },
    PinCourse { ta: String, course: String },
    Forbid { ta: String, course: String },
    SetBound { field: String, value: i64 },
    SetWeight { family: String, value: i64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edit {
    #[serde(flatten)]
    pub kind: EditKind,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

impl Edit {
    pub fn new(kind: EditKind) -> Self {
        Edit { kind, note: String::new() }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("bad edit: {0}")]
pub struct EditError(pub String);

pub fn apply_edit(instance: &Instance, edit: &Edit) -> Result<Instance, EditError> {
    let mut file = instance.to_file();
    let check_ids = |ta: &str, course: &str| -> Result<(), EditError> {
        if instance.ta_position(ta).is_none() {
            return Err(EditError(format!("unknown TA {ta:?}")));
        }
        if instance.course_position(course).is_none() {
            return Err(EditError(format!("unknown course {course:?}")));
        }
        Ok(())
    };
    match &edit.kind {
        EditKind::PinHours { ta, course, task, hours } => {
            check_ids(ta, course)?;
            let c = instance.course_position(course).expect("checked");
            let tau = instance.kind_position(*task).map(|k| instance.task_hours(c, k)).unwrap_or(0);
            if tau == 0 {
                return Err(EditError(format!("course {course} has no {task} task")));
            }
            if *hours < 0 || *hours > tau {
                return Err(EditError(format!("pinned hours {hours} outside [0, {tau}]")));
            }
            file.pins.retain(|p| !(p.ta == *ta && p.course == *course && p.task == Some(*task)));
            file.pins.push(PinFile { ta: ta.clone(), course: course.clone(), task: Some(*task), hours: Some(*hours) });
        }
        EditKind::PinCourse { ta, course } => {
            check_ids(ta, course)?;
            file.pins.push(PinFile { ta: ta.clone(), course: course.clone(), task: None, hours: None });
        }
        EditKind::Forbid { ta, course } => {
            check_ids(ta, course)?;
            match file.pairs.iter_mut().find(|p| p.ta == *ta && p.course == *course) {
                Some(p) => p.forbidden = true,
                None => file.pairs.push(PairFile {
                    ta: ta.clone(),
                    course: course.clone(),
                    preference: 0,
                    forbidden: true,
                    taught_last_year: false,
                }),
            }
        }
        EditKind::SetBound { field, value } => {
            let mut bounds = *instance.bounds();
            if !bounds.set(field, *value) {
                return Err(EditError(format!("unknown bound {field:?}")));
            }
            bounds.validate("bounds").map_err(|e| EditError(e.to_string()))?;
            file.bounds = super::BoundsFile::from_config(&bounds);
            // Targets depend on the annual load; drop the informational copies.
            for ta in &mut file.tas {
                ta.target_hours = None;
            }
        }
        EditKind::SetWeight { family, value } => {
            let family = SoftFamily::parse(family).ok_or_else(|| EditError(format!("unknown soft family {family:?}")))?;
            if *value < 0 {
                return Err(EditError(format!("weight {value} must be >= 0")));
            }
            let mut weights = *instance.weights();
            weights.set_weight(family, *value);
            file.weights = super::WeightsFile::from_config(&weights);
        }
    }
    Instance::from_file(file).map_err(|e| EditError(e.to_string()))
}

pub fn apply_edits<'a>(instance: &Instance, edits: impl IntoIterator<Item = &'a Edit>) -> Result<Instance, EditError> {
    let mut current = instance.clone();
    for edit in edits {
        current = apply_edit(&current, edit)?;
    }
    Ok(current)
}

//! The JSON instance document and its validation into an [`Instance`].

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::{
    compute_target, BoundConfig, Course, CourseTask, Fraction, Instance, PairData, PenaltyMode, Pin, PinTarget,
    TaskKind, TeachingAssistant, ValidationError, WeightConfig,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    #[serde(default)]
    pub label: String,
    #[serde(default)]
    pub bounds: BoundsFile,
    #[serde(default)]
    pub weights: WeightsFile,
    pub tas: Vec<TaFile>,
    pub courses: Vec<CourseFile>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pairs: Vec<PairFile>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pins: Vec<PinFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaFile {
    pub id: String,
    pub year: i64,
    pub employment_fraction: f64,
    #[serde(default)]
    pub carryover_hours: i64,
    /// Informational on output; checked against the computed value on input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_hours: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CourseFile {
    pub id: String,
    pub tasks: Vec<TaskFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskFile {
    pub kind: TaskKind,
    pub total_hours: i64,
    #[serde(default)]
    pub required_tas: i64,
}

fn is_zero(v: &i64) -> bool {
    *v == 0
}

fn is_false(v: &bool) -> bool {
    !*v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairFile {
    pub ta: String,
    pub course: String,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub preference: i64,
    #[serde(default, skip_serializing_if = "is_false")]
    pub forbidden: bool,
    #[serde(default, skip_serializing_if = "is_false")]
    pub taught_last_year: bool,
}

/// `{ta, course}` pins the course; `{ta, course, task, hours}` pins hours.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PinFile {
    pub ta: String,
    pub course: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<TaskKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hours: Option<i64>,
}

/// Bounds as written in a file. Missing hard values come from `preset`
/// (default 2022); missing soft values are derived from the hard ones.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<u16>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hard_dev: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub soft_dev: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hard_new_courses: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub soft_new_courses: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hard_courses_per_ta: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub soft_courses_per_ta: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hard_tas_per_course: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub soft_extra_tas_per_task: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_task_hours: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annual_full_load: Option<i64>,
}

impl BoundsFile {
    pub fn from_config(b: &BoundConfig) -> Self {
        BoundsFile {
            preset: None,
            hard_dev: Some(b.hard_dev),
            soft_dev: Some(b.soft_dev),
            hard_new_courses: Some(b.hard_new_courses),
            soft_new_courses: Some(b.soft_new_courses),
            hard_courses_per_ta: Some(b.hard_courses_per_ta),
            soft_courses_per_ta: Some(b.soft_courses_per_ta),
            hard_tas_per_course: Some(b.hard_tas_per_course),
            soft_extra_tas_per_task: Some(b.soft_extra_tas_per_task),
            min_task_hours: Some(b.min_task_hours),
            annual_full_load: Some(b.annual_full_load),
        }
    }

    pub fn resolve(&self) -> Result<BoundConfig, ValidationError> {
        let base = match self.preset {
            Some(year) => BoundConfig::table_preset(year)
                .ok_or_else(|| ValidationError::new("bounds.preset", format!("no preset for year {year}")))?,
            None => BoundConfig::default(),
        };
        let hard = BoundConfig::from_hard(
            self.hard_dev.unwrap_or(base.hard_dev),
            self.hard_courses_per_ta.unwrap_or(base.hard_courses_per_ta),
            self.hard_tas_per_course.unwrap_or(base.hard_tas_per_course),
            self.hard_new_courses.unwrap_or(base.hard_new_courses),
        );
        let bounds = BoundConfig {
            soft_dev: self.soft_dev.unwrap_or(hard.soft_dev),
            soft_new_courses: self.soft_new_courses.unwrap_or(hard.soft_new_courses),
            soft_courses_per_ta: self.soft_courses_per_ta.unwrap_or(hard.soft_courses_per_ta),
            soft_extra_tas_per_task: self.soft_extra_tas_per_task.unwrap_or(hard.soft_extra_tas_per_task),
            min_task_hours: self.min_task_hours.unwrap_or(hard.min_task_hours),
            annual_full_load: self.annual_full_load.unwrap_or(hard.annual_full_load),
            ..hard
        };
        bounds.validate("bounds")?;
        Ok(bounds)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_target5: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_soft_dev: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_soft_new: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_soft_staff: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_soft_courses: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_pref_positive: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_pref_negative: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub penalty_mode: Option<PenaltyMode>,
}

impl WeightsFile {
    pub fn from_config(w: &WeightConfig) -> Self {
        WeightsFile {
            w_target5: Some(w.w_target5),
            w_soft_dev: Some(w.w_soft_dev),
            w_soft_new: Some(w.w_soft_new),
            w_soft_staff: Some(w.w_soft_staff),
            w_soft_courses: Some(w.w_soft_courses),
            w_pref_positive: Some(w.w_pref_positive),
            w_pref_negative: Some(w.w_pref_negative),
            penalty_mode: Some(w.penalty_mode),
        }
    }

    pub fn resolve(&self) -> Result<WeightConfig, ValidationError> {
        let d = WeightConfig::default();
        let weights = WeightConfig {
            w_target5: self.w_target5.unwrap_or(d.w_target5),
            w_soft_dev: self.w_soft_dev.unwrap_or(d.w_soft_dev),
            w_soft_new: self.w_soft_new.unwrap_or(d.w_soft_new),
            w_soft_staff: self.w_soft_staff.unwrap_or(d.w_soft_staff),
            w_soft_courses: self.w_soft_courses.unwrap_or(d.w_soft_courses),
            w_pref_positive: self.w_pref_positive.unwrap_or(d.w_pref_positive),
            w_pref_negative: self.w_pref_negative.unwrap_or(d.w_pref_negative),
            penalty_mode: self.penalty_mode.unwrap_or(d.penalty_mode),
        };
        weights.validate("weights")?;
        Ok(weights)
    }
}

fn check_id(id: &str, path: &str) -> Result<(), ValidationError> {
    if id.is_empty() || id.chars().any(char::is_whitespace) {
        return Err(ValidationError::new(path, "id must be non-empty without whitespace"));
    }
    Ok(())
}

impl Instance {
    /// Validates a file document. All derived data is computed here.
    pub fn from_file(file: InstanceFile) -> Result<Instance, ValidationError> {
        let bounds = file.bounds.resolve()?;
        let weights = file.weights.resolve()?;

        let mut ta_index = HashMap::new();
        let mut tas = Vec::with_capacity(file.tas.len());
        for (i, ta) in file.tas.iter().enumerate() {
            let path = format!("tas[{i}]");
            check_id(&ta.id, &format!("{path}.id"))?;
            if ta_index.insert(ta.id.clone(), i).is_some() {
                return Err(ValidationError::new(format!("{path}.id"), format!("duplicate TA id {:?}", ta.id)));
            }
            if !(1..=5).contains(&ta.year) {
                return Err(ValidationError::new(format!("{path}.year"), "year must be in 1..5"));
            }
            let fraction = Fraction::from_decimal(ta.employment_fraction)
                .filter(|f| f.is_within_unit())
                .ok_or_else(|| {
                    ValidationError::new(format!("{path}.employment_fraction"), "employment_fraction out of [0,1]")
                })?;
            let target_hours = compute_target(fraction, ta.carryover_hours, bounds.annual_full_load);
            if let Some(given) = ta.target_hours {
                if given != target_hours {
                    return Err(ValidationError::new(
                        format!("{path}.target_hours"),
                        format!("target_hours {given} disagrees with computed {target_hours}"),
                    ));
                }
            }
            tas.push(TeachingAssistant {
                id: ta.id.clone(),
                year: ta.year as u8,
                employment_fraction: fraction,
                carryover_hours: ta.carryover_hours,
                target_hours,
            });
        }

        let mut course_index = HashMap::new();
        let mut courses = Vec::with_capacity(file.courses.len());
        let mut present = BTreeSet::new();
        for (ci, course) in file.courses.iter().enumerate() {
            let path = format!("courses[{ci}]");
            check_id(&course.id, &format!("{path}.id"))?;
            if course_index.insert(course.id.clone(), ci).is_some() {
                return Err(ValidationError::new(format!("{path}.id"), format!("duplicate course id {:?}", course.id)));
            }
            let mut seen = BTreeSet::new();
            let mut tasks = Vec::new();
            for (ti, task) in course.tasks.iter().enumerate() {
                let tpath = format!("{path}.tasks[{ti}]");
                if !seen.insert(task.kind) {
                    return Err(ValidationError::new(format!("{tpath}.kind"), format!("duplicate task kind {}", task.kind)));
                }
                if task.total_hours < 0 {
                    return Err(ValidationError::new(format!("{tpath}.total_hours"), "total_hours must be >= 0"));
                }
                if task.required_tas < 0 {
                    return Err(ValidationError::new(format!("{tpath}.required_tas"), "required_tas must be >= 0"));
                }
                if task.total_hours == 0 {
                    if task.required_tas != 0 {
                        return Err(ValidationError::new(
                            format!("{tpath}.required_tas"),
                            "required_tas must be 0 for an absent task (total_hours = 0)",
                        ));
                    }
                    continue;
                }
                present.insert(task.kind);
                tasks.push(CourseTask { kind: task.kind, total_hours: task.total_hours, required_tas: task.required_tas });
            }
            if !tasks.iter().any(|t| t.kind == TaskKind::Admin) {
                return Err(ValidationError::new(
                    format!("{path}.tasks"),
                    "every course needs an admin task with total_hours > 0",
                ));
            }
            tasks.sort_by_key(|t| t.kind);
            courses.push(Course { id: course.id.clone(), tasks });
        }
        let kinds: Vec<TaskKind> = present.into_iter().collect();

        let n_courses = courses.len();
        let mut task_table = vec![(0, 0); n_courses * kinds.len()];
        for (ci, course) in courses.iter().enumerate() {
            for task in &course.tasks {
                let k = kinds.iter().position(|&kind| kind == task.kind).expect("present kind");
                task_table[ci * kinds.len() + k] = (task.total_hours, task.required_tas);
            }
        }

        let mut pairs = vec![PairData::default(); tas.len() * n_courses];
        let mut seen_pairs = BTreeSet::new();
        for (i, pair) in file.pairs.iter().enumerate() {
            let path = format!("pairs[{i}]");
            let s = *ta_index
                .get(&pair.ta)
                .ok_or_else(|| ValidationError::new(format!("{path}.ta"), format!("unknown TA {:?}", pair.ta)))?;
            let c = *course_index.get(&pair.course).ok_or_else(|| {
                ValidationError::new(format!("{path}.course"), format!("unknown course {:?}", pair.course))
            })?;
            if !seen_pairs.insert((s, c)) {
                return Err(ValidationError::new(path, format!("duplicate pair ({}, {})", pair.ta, pair.course)));
            }
            if !(-1..=1).contains(&pair.preference) {
                return Err(ValidationError::new(format!("{path}.preference"), "preference must be in {-1,0,1}"));
            }
            pairs[s * n_courses + c] = PairData {
                preference: pair.preference as i8,
                forbidden: pair.forbidden,
                taught_last_year: pair.taught_last_year,
            };
        }

        let mut pins = Vec::new();
        for (i, pin) in file.pins.iter().enumerate() {
            let path = format!("pins[{i}]");
            let s = *ta_index
                .get(&pin.ta)
                .ok_or_else(|| ValidationError::new(format!("{path}.ta"), format!("unknown TA {:?}", pin.ta)))?;
            let c = *course_index.get(&pin.course).ok_or_else(|| {
                ValidationError::new(format!("{path}.course"), format!("unknown course {:?}", pin.course))
            })?;
            let target = match (pin.task, pin.hours) {
                (None, None) => PinTarget::Course,
                (Some(kind), Some(hours)) => {
                    let k = kinds.iter().position(|&x| x == kind);
                    let tau = k.map(|k| task_table[c * kinds.len() + k].0).unwrap_or(0);
                    let Some(k) = k.filter(|_| tau > 0) else {
                        return Err(ValidationError::new(
                            format!("{path}.task"),
                            format!("course {} has no {kind} task", pin.course),
                        ));
                    };
                    if hours < 0 || hours > tau {
                        return Err(ValidationError::new(
                            format!("{path}.hours"),
                            format!("pinned hours {hours} outside [0, {tau}]"),
                        ));
                    }
                    PinTarget::Hours { kind: k, hours }
                }
                _ => {
                    return Err(ValidationError::new(path, "a pin needs both task and hours, or neither"));
                }
            };
            pins.push(Pin { ta: s, course: c, target });
        }
        pins.sort_by_key(|p| match p.target {
            PinTarget::Course => (p.ta, p.course, 0, 0, 0),
            PinTarget::Hours { kind, hours } => (p.ta, p.course, 1, kind, hours),
        });
        pins.dedup();

        Ok(Instance {
            label: file.label,
            tas,
            courses,
            bounds,
            weights,
            pins,
            kinds,
            pairs,
            task_table,
            ta_index,
            course_index,
        })
    }

    /// The canonical file document for this instance.
    pub fn to_file(&self) -> InstanceFile {
        let n_courses = self.courses.len();
        let mut pairs = Vec::new();
        for (s, ta) in self.tas.iter().enumerate() {
            for (c, course) in self.courses.iter().enumerate() {
                let p = self.pairs[s * n_courses + c];
                if !p.is_default() {
                    pairs.push(PairFile {
                        ta: ta.id.clone(),
                        course: course.id.clone(),
                        preference: p.preference as i64,
                        forbidden: p.forbidden,
                        taught_last_year: p.taught_last_year,
                    });
                }
            }
        }
        let pins = self
            .pins
            .iter()
            .map(|pin| {
                let (task, hours) = match pin.target {
                    PinTarget::Course => (None, None),
                    PinTarget::Hours { kind, hours } => (Some(self.kinds[kind]), Some(hours)),
                };
                PinFile { ta: self.tas[pin.ta].id.clone(), course: self.courses[pin.course].id.clone(), task, hours }
            })
            .collect();
        InstanceFile {
            label: self.label.clone(),
            bounds: BoundsFile::from_config(&self.bounds),
            weights: WeightsFile::from_config(&self.weights),
            tas: self
                .tas
                .iter()
                .map(|ta| TaFile {
                    id: ta.id.clone(),
                    year: ta.year as i64,
                    employment_fraction: ta.employment_fraction.to_f64(),
                    carryover_hours: ta.carryover_hours,
                    target_hours: Some(ta.target_hours),
                })
                .collect(),
            courses: self
                .courses
                .iter()
                .map(|c| CourseFile {
                    id: c.id.clone(),
                    tasks: c
                        .tasks
                        .iter()
                        .map(|t| TaskFile { kind: t.kind, total_hours: t.total_hours, required_tas: t.required_tas })
                        .collect(),
                })
                .collect(),
            pairs,
            pins,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc() -> InstanceFile {
        serde_json::from_str(
            r#"{
  "label": "t",
  "bounds": {"preset": 2023, "soft_dev": 10},
  "tas": [
    {"id": "a", "year": 5, "employment_fraction": 0.15, "carryover_hours": -3},
    {"id": "b", "year": 2, "employment_fraction": 1}
  ],
  "courses": [
    {"id": "c2", "tasks": [{"kind": "lab_session", "total_hours": 20, "required_tas": 2},
                          {"kind": "admin", "total_hours": 5, "required_tas": 1},
                          {"kind": "other", "total_hours": 0}]}
  ],
  "pairs": [{"ta": "b", "course": "c2", "taught_last_year": true},
            {"ta": "a", "course": "c2", "preference": 0}],
  "pins": [{"ta": "a", "course": "c2"}]
}"#,
        )
        .unwrap()
    }

    #[test]
    fn presets_and_overrides_resolve() {
        let inst = Instance::from_file(doc()).unwrap();
        assert_eq!(inst.bounds().hard_dev, 120);
        assert_eq!(inst.bounds().hard_courses_per_ta, 3);
        assert_eq!(inst.bounds().soft_dev, 10);
        assert_eq!(inst.bounds().soft_courses_per_ta, 2);
        assert_eq!(inst.target(0), 50);
        assert_eq!(inst.kinds(), &[TaskKind::Admin, TaskKind::LabSession]);
        assert_eq!(inst.task_hours(0, 1), 20);
        assert!(inst.pair(1, 0).taught_last_year);
    }

    #[test]
    fn canonical_form_is_a_fixed_point() {
        let inst = Instance::from_file(doc()).unwrap();
        let text = inst.to_json();
        let again = Instance::from_json(&text).unwrap();
        assert_eq!(again, inst);
        assert_eq!(again.to_json(), text);
        // Default pairs and absent tasks are dropped.
        assert_eq!(again.to_file().pairs.len(), 1);
        assert_eq!(again.courses()[0].tasks.len(), 2);
    }

    #[test]
    fn unknown_pair_reference_is_reported_with_path() {
        let mut d = doc();
        d.pairs[0].course = "nope".into();
        let err = Instance::from_file(d).unwrap_err();
        assert_eq!(err.path, "pairs[0].course");
    }

    #[test]
    fn course_without_admin_is_rejected() {
        let mut d = doc();
        d.courses[0].tasks.retain(|t| t.kind != TaskKind::Admin);
        assert!(Instance::from_file(d).unwrap_err().message.contains("admin"));
    }

    #[test]
    fn pin_hours_beyond_task_hours_is_rejected() {
        let mut d = doc();
        d.pins.push(PinFile { ta: "b".into(), course: "c2".into(), task: Some(TaskKind::LabSession), hours: Some(21) });
        assert_eq!(Instance::from_file(d).unwrap_err().path, "pins[1].hours");
    }

    #[test]
    fn absent_task_with_staffing_is_rejected() {
        let mut d = doc();
        d.courses[0].tasks[2].required_tas = 1;
        assert!(Instance::from_file(d).is_err());
    }

    #[test]
    fn inconsistent_target_is_rejected() {
        let mut d = doc();
        d.tas[1].target_hours = Some(100);
        assert_eq!(Instance::from_file(d).unwrap_err().path, "tas[1].target_hours");
    }

    #[test]
    fn unknown_fields_are_parse_errors() {
        let text = r#"{"tas": [], "courses": [], "colour": 1}"#;
        assert!(matches!(Instance::from_json(text), Err(super::super::LoadError::Parse(_))));
    }
}

use std::fmt;

use serde::{Deserialize, Serialize};

use super::{ValidationError, DEFAULT_ANNUAL_FULL_LOAD};

/// Hard and soft bounds of the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundConfig {
    /// Hard bound on `|h - target|`.
    pub hard_dev: i64,
    /// Soft bound on `|h - target|`.
    pub soft_dev: i64,
    pub hard_new_courses: i64,
    pub soft_new_courses: i64,
    pub hard_courses_per_ta: i64,
    pub soft_courses_per_ta: i64,
    pub hard_tas_per_course: i64,
    /// TAs tolerated on a task beyond its required number.
    pub soft_extra_tas_per_task: i64,
    /// Minimum hours on a task for a TA assigned to it (capped by the task's hours).
    pub min_task_hours: i64,
    pub annual_full_load: i64,
}

impl BoundConfig {
    /// Builds a configuration from the hard values; soft values and the
    /// minimum task hours take their shipped defaults.
    pub fn from_hard(hard_dev: i64, hard_courses_per_ta: i64, hard_tas_per_course: i64, hard_new_courses: i64) -> Self {
        BoundConfig {
            hard_dev,
            soft_dev: hard_dev / 2,
            hard_new_courses,
            soft_new_courses: 0,
            hard_courses_per_ta,
            soft_courses_per_ta: (hard_courses_per_ta - 1).max(0),
            hard_tas_per_course,
            soft_extra_tas_per_task: 0,
            min_task_hours: 5,
            annual_full_load: DEFAULT_ANNUAL_FULL_LOAD,
        }
    }

    /// Hard values used for the 2022-2026 planning rounds of the original data.
    pub fn table_preset(year: u16) -> Option<Self> {
        let (dev, courses) = match year {
            2022 => (100, 2),
            2023 => (120, 3),
            2024 => (150, 3),
            2025 => (150, 2),
            2026 => (160, 3),
            _ => return None,
        };
        Some(BoundConfig::from_hard(dev, courses, 8, 1))
    }

    pub(crate) fn validate(&self, path: &str) -> Result<(), ValidationError> {
        let fields = [
            ("hard_dev", self.hard_dev),
            ("soft_dev", self.soft_dev),
            ("hard_new_courses", self.hard_new_courses),
            ("soft_new_courses", self.soft_new_courses),
            ("hard_courses_per_ta", self.hard_courses_per_ta),
            ("soft_courses_per_ta", self.soft_courses_per_ta),
            ("hard_tas_per_course", self.hard_tas_per_course),
            ("soft_extra_tas_per_task", self.soft_extra_tas_per_task),
            ("min_task_hours", self.min_task_hours),
            ("annual_full_load", self.annual_full_load),
        ];
        for (name, value) in fields {
            if value < 0 {
                return Err(ValidationError::new(format!("{path}.{name}"), format!("{name} must be >= 0")));
            }
        }
        if self.annual_full_load == 0 {
            return Err(ValidationError::new(format!("{path}.annual_full_load"), "annual_full_load must be > 0"));
        }
        let pairs = [
            ("soft_dev", self.soft_dev, "hard_dev", self.hard_dev),
            ("soft_new_courses", self.soft_new_courses, "hard_new_courses", self.hard_new_courses),
            ("soft_courses_per_ta", self.soft_courses_per_ta, "hard_courses_per_ta", self.hard_courses_per_ta),
        ];
        for (soft, soft_value, hard, hard_value) in pairs {
            if soft_value > hard_value {
                return Err(ValidationError::new(format!("{path}.{soft}"), format!("{soft} must not exceed {hard}")));
            }
        }
        Ok(())
    }

    /// Sets one field by its JSON name.
    pub fn set(&mut self, field: &str, value: i64) -> bool {
        let slot = match field {
            "hard_dev" => &mut self.hard_dev,
            "soft_dev" => &mut self.soft_dev,
            "hard_new_courses" => &mut self.hard_new_courses,
            "soft_new_courses" => &mut self.soft_new_courses,
            "hard_courses_per_ta" => &mut self.hard_courses_per_ta,
            "soft_courses_per_ta" => &mut self.soft_courses_per_ta,
            "hard_tas_per_course" => &mut self.hard_tas_per_course,
            "soft_extra_tas_per_task" => &mut self.soft_extra_tas_per_task,
            "min_task_hours" => &mut self.min_task_hours,
            "annual_full_load" => &mut self.annual_full_load,
            _ => return false,
        };
        *slot = value;
        true
    }
}

impl Default for BoundConfig {
    fn default() -> Self {
        BoundConfig::table_preset(2022).expect("2022 preset exists")
    }
}

/// How a violated soft constraint is charged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyMode {
    /// One 0/1 indicator per soft clause; the weight is charged once if violated.
    #[default]
    Indicator,
    /// One slack per soft clause; the weight is charged per unit of excess.
    Magnitude,
}

impl fmt::Display for PenaltyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PenaltyMode::Indicator => "indicator",
            PenaltyMode::Magnitude => "magnitude",
        })
    }
}

/// The seven soft constraint families, numbered as in the formulation (14-20).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SoftFamily {
    /// Fifth-year TAs should hit their target exactly.
    #[serde(rename = "Eq14")]
    TargetFifthYear,
    /// `|h - target| <= soft_dev`.
    #[serde(rename = "Eq15")]
    SoftDeviation,
    /// New courses `<= soft_new_courses`.
    #[serde(rename = "Eq16")]
    SoftNewCourses,
    /// TAs on a task `<= required + soft_extra_tas_per_task`.
    #[serde(rename = "Eq17")]
    SoftStaffing,
    /// Courses per TA `<= soft_courses_per_ta`.
    #[serde(rename = "Eq18")]
    SoftCourses,
    /// A favoured course should be assigned.
    #[serde(rename = "Eq19")]
    PreferencePositive,
    /// A disfavoured course should not be assigned.
    #[serde(rename = "Eq20")]
    PreferenceNegative,
}

impl SoftFamily {
    pub const ALL: [SoftFamily; 7] = [
        SoftFamily::TargetFifthYear,
        SoftFamily::SoftDeviation,
        SoftFamily::SoftNewCourses,
        SoftFamily::SoftStaffing,
        SoftFamily::SoftCourses,
        SoftFamily::PreferencePositive,
        SoftFamily::PreferenceNegative,
    ];

    pub fn equation(self) -> u8 {
        match self {
            SoftFamily::TargetFifthYear => 14,
            SoftFamily::SoftDeviation => 15,
            SoftFamily::SoftNewCourses => 16,
            SoftFamily::SoftStaffing => 17,
            SoftFamily::SoftCourses => 18,
            SoftFamily::PreferencePositive => 19,
            SoftFamily::PreferenceNegative => 20,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            SoftFamily::TargetFifthYear => "Eq14",
            SoftFamily::SoftDeviation => "Eq15",
            SoftFamily::SoftNewCourses => "Eq16",
            SoftFamily::SoftStaffing => "Eq17",
            SoftFamily::SoftCourses => "Eq18",
            SoftFamily::PreferencePositive => "Eq19",
            SoftFamily::PreferenceNegative => "Eq20",
        }
    }

    /// JSON name of the weight field for this family.
    pub fn weight_field(self) -> &'static str {
        match self {
            SoftFamily::TargetFifthYear => "w_target5",
            SoftFamily::SoftDeviation => "w_soft_dev",
            SoftFamily::SoftNewCourses => "w_soft_new",
            SoftFamily::SoftStaffing => "w_soft_staff",
            SoftFamily::SoftCourses => "w_soft_courses",
            SoftFamily::PreferencePositive => "w_pref_positive",
            SoftFamily::PreferenceNegative => "w_pref_negative",
        }
    }

    /// Accepts either the equation tag (`Eq15`) or the weight field name.
    pub fn parse(name: &str) -> Option<SoftFamily> {
        SoftFamily::ALL.into_iter().find(|f| f.tag() == name || f.weight_field() == name)
    }
}

impl fmt::Display for SoftFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// One non-negative weight per soft family plus the penalty mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightConfig {
    pub w_target5: i64,
    pub w_soft_dev: i64,
    pub w_soft_new: i64,
    pub w_soft_staff: i64,
    pub w_soft_courses: i64,
    pub w_pref_positive: i64,
    pub w_pref_negative: i64,
    pub penalty_mode: PenaltyMode,
}

impl Default for WeightConfig {
    fn default() -> Self {
        WeightConfig {
            w_target5: 30,
            w_soft_dev: 30,
            w_soft_new: 0,
            w_soft_staff: 1,
            w_soft_courses: 5,
            w_pref_positive: 1,
            w_pref_negative: 1,
            penalty_mode: PenaltyMode::Indicator,
        }
    }
}

impl WeightConfig {
    pub fn weight(&self, family: SoftFamily) -> i64 {
        match family {
            SoftFamily::TargetFifthYear => self.w_target5,
            SoftFamily::SoftDeviation => self.w_soft_dev,
            SoftFamily::SoftNewCourses => self.w_soft_new,
            SoftFamily::SoftStaffing => self.w_soft_staff,
            SoftFamily::SoftCourses => self.w_soft_courses,
            SoftFamily::PreferencePositive => self.w_pref_positive,
            SoftFamily::PreferenceNegative => self.w_pref_negative,
        }
    }

    pub fn set_weight(&mut self, family: SoftFamily, value: i64) {
        let slot = match family {
            SoftFamily::TargetFifthYear => &mut self.w_target5,
            SoftFamily::SoftDeviation => &mut self.w_soft_dev,
            SoftFamily::SoftNewCourses => &mut self.w_soft_new,
            SoftFamily::SoftStaffing => &mut self.w_soft_staff,
            SoftFamily::SoftCourses => &mut self.w_soft_courses,
            SoftFamily::PreferencePositive => &mut self.w_pref_positive,
            SoftFamily::PreferenceNegative => &mut self.w_pref_negative,
        };
        *slot = value;
    }

    pub fn with_mode(mut self, mode: PenaltyMode) -> Self {
        self.penalty_mode = mode;
        self
    }

    pub(crate) fn validate(&self, path: &str) -> Result<(), ValidationError> {
        for family in SoftFamily::ALL {
            if self.weight(family) < 0 {
                let name = family.weight_field();
                return Err(ValidationError::new(format!("{path}.{name}"), format!("{name} must be >= 0")));
            }
        }
        Ok(())
    }
}

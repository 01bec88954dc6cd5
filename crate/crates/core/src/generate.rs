//! Seeded synthetic instances.
//!
//! TAs are drawn first: year uniform in 1..=5, employment fraction uniform
//! over {0.1, 0.2, ..., 1.0}, carryover uniform in -40..=40. Each TA then
//! receives a planted load of `ratio * target` hours, spread over at most
//! `hard_courses_per_ta` courses and one or two tasks per course, in chunks
//! of at least `min_task_hours`. Task hours and staffing are the sums of the
//! planted chunks, so for ratios close to 1 the planted schedule satisfies
//! every hard rule. Continuity comes from a simulated previous year that
//! keeps all but at most `hard_new_courses` of each TA's planted courses.
//! Preferences are sparse and uniform over {-1, 1}; a few pairs outside the
//! planted schedule are forbidden.

use std::collections::BTreeSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assignment::Assignment;
use crate::instance::{
    BoundConfig, BoundsFile, CourseFile, Instance, InstanceFile, PairFile, PenaltyMode, TaFile, TaskFile, TaskKind,
    WeightConfig, WeightsFile,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub n_tas: usize,
    pub n_courses: usize,
    /// Including the admin task.
    pub max_tasks_per_course: usize,
    /// Total task hours over total target hours, in (0, 1.2].
    pub demand_to_capacity_ratio: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("max_tasks_per_course must be at most {max}")]
    TooManyTasks { max: usize },
    #[error("demand_to_capacity_ratio {0} is outside (0, 1.2]")]
    Ratio(f64),
}

impl GenSpec {
    pub fn new(n_tas: usize, n_courses: usize, max_tasks_per_course: usize, ratio: f64, seed: u64) -> Self {
        GenSpec { n_tas, n_courses, max_tasks_per_course, demand_to_capacity_ratio: ratio, seed }
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        if self.n_tas == 0 {
            return Err(SpecError::NonPositive("n_tas"));
        }
        if self.n_courses == 0 {
            return Err(SpecError::NonPositive("n_courses"));
        }
        if self.max_tasks_per_course == 0 {
            return Err(SpecError::NonPositive("max_tasks_per_course"));
        }
        if self.max_tasks_per_course > TaskKind::ALL.len() {
            return Err(SpecError::TooManyTasks { max: TaskKind::ALL.len() });
        }
        let r = self.demand_to_capacity_ratio;
        if !(r > 0.0 && r <= 1.2) {
            return Err(SpecError::Ratio(r));
        }
        Ok(())
    }
}

/// A generated instance with the schedule it was planted around.
#[derive(Debug, Clone)]
pub struct Generated {
    pub instance: Instance,
    pub planted: Assignment,
}

pub fn generate(spec: &GenSpec) -> Result<Instance, SpecError> {
    generate_planted(spec).map(|g| g.instance)
}

pub fn generate_planted(spec: &GenSpec) -> Result<Generated, SpecError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let bounds = BoundConfig::default();
    let eps = bounds.min_task_hours;

    let tas: Vec<TaFile> = (0..spec.n_tas)
        .map(|s| TaFile {
            id: format!("ta{s:02}"),
            year: rng.random_range(1..=5),
            employment_fraction: rng.random_range(1..=10) as f64 / 10.0,
            carryover_hours: rng.random_range(-40..=40),
            target_hours: None,
        })
        .collect();
    let loads: Vec<i64> = tas
        .iter()
        .map(|t| {
            let target = (t.employment_fraction * bounds.annual_full_load as f64).round() as i64 + t.carryover_hours;
            ((spec.demand_to_capacity_ratio * target as f64).round() as i64).max(0)
        })
        .collect();

    let others: Vec<TaskKind> = TaskKind::ALL[1..].to_vec();
    let course_kinds: Vec<Vec<TaskKind>> = (0..spec.n_courses)
        .map(|_| {
            let m = rng.random_range(0..spec.max_tasks_per_course);
            let mut kinds: Vec<TaskKind> = others.choose_multiple(&mut rng, m).copied().collect();
            kinds.sort();
            kinds.insert(0, TaskKind::Admin);
            kinds
        })
        .collect();
    let cap = |c: usize| if course_kinds[c].len() == 1 { 1 } else { bounds.hard_tas_per_course as usize };

    // Planted (TA, course) pairs.
    let slots: Vec<usize> = loads
        .iter()
        .map(|&l| {
            let most = (l / eps).min(bounds.hard_courses_per_ta) as usize;
            if most == 0 {
                0
            } else {
                rng.random_range(1..=most)
            }
        })
        .collect();
    let mut taken = vec![0usize; spec.n_tas];
    let mut staff: Vec<Vec<usize>> = vec![Vec::new(); spec.n_courses];
    let mut by_load: Vec<usize> = (0..spec.n_tas).collect();
    by_load.sort_by_key(|&s| (std::cmp::Reverse(loads[s]), s));
    let mut course_order: Vec<usize> = (0..spec.n_courses).collect();
    course_order.shuffle(&mut rng);
    let mut cursor = 0;
    for &c in &course_order {
        for _ in 0..spec.n_tas {
            let s = by_load[cursor % spec.n_tas];
            cursor += 1;
            if taken[s] < slots[s] {
                staff[c].push(s);
                taken[s] += 1;
                break;
            }
        }
    }
    for &s in &by_load {
        while taken[s] < slots[s] {
            let open: Vec<usize> = (0..spec.n_courses).filter(|&c| staff[c].len() < cap(c) && !staff[c].contains(&s)).collect();
            let Some(&c) = open.choose(&mut rng) else { break };
            staff[c].push(s);
            taken[s] += 1;
        }
    }

    // Each TA's load split over its courses in chunks of at least `eps`.
    let mut share = vec![vec![0i64; spec.n_courses]; spec.n_tas];
    for s in 0..spec.n_tas {
        let mine: Vec<usize> = (0..spec.n_courses).filter(|&c| staff[c].contains(&s)).collect();
        for (c, part) in mine.iter().zip(split(&mut rng, loads[s], mine.len(), eps)) {
            share[s][*c] = part;
        }
    }

    let n_kinds = TaskKind::ALL.len();
    let mut hours = vec![vec![vec![0i64; n_kinds]; spec.n_courses]; spec.n_tas];
    for c in 0..spec.n_courses {
        let kinds = &course_kinds[c];
        for (i, &s) in staff[c].iter().enumerate() {
            let mut rest = share[s][c];
            if i == 0 {
                let admin = if kinds.len() == 1 || rest < 2 * eps { rest } else { rng.random_range(eps..=rest.min(30).max(eps)) };
                let admin = if rest - admin < eps { rest } else { admin };
                hours[s][c][TaskKind::Admin.code()] += admin;
                rest -= admin;
            }
            if rest == 0 {
                continue;
            }
            let pieces = if rest >= 2 * eps && kinds.len() > 2 && rng.random_bool(0.5) { 2 } else { 1 };
            let picked: Vec<TaskKind> = kinds[1..].choose_multiple(&mut rng, pieces).copied().collect();
            for (k, part) in picked.iter().zip(split(&mut rng, rest, picked.len(), eps)) {
                hours[s][c][k.code()] += part;
            }
        }
    }

    let courses: Vec<CourseFile> = (0..spec.n_courses)
        .map(|c| {
            let mut tasks = Vec::new();
            for &k in &course_kinds[c] {
                let mut tau: i64 = (0..spec.n_tas).map(|s| hours[s][c][k.code()]).sum();
                let mut on = (0..spec.n_tas).filter(|&s| hours[s][c][k.code()] > 0).count() as i64;
                if k == TaskKind::Admin && tau == 0 {
                    tau = rng.random_range(eps..=3 * eps);
                    on = 1;
                }
                if tau == 0 {
                    continue;
                }
                let rho = if on > 1 && rng.random_bool(0.3) { on - 1 } else { on.max(1) };
                tasks.push(TaskFile { kind: k, total_hours: tau, required_tas: rho });
            }
            CourseFile { id: format!("c{c:02}"), tasks }
        })
        .collect();

    // Previous year: each TA kept all but at most `hard_new_courses` of its
    // planted courses and taught others up to the course limit.
    let mut taught_last_year = BTreeSet::new();
    for s in 0..spec.n_tas {
        let mut mine: Vec<usize> = (0..spec.n_courses).filter(|&c| staff[c].contains(&s)).collect();
        mine.shuffle(&mut rng);
        let fresh = rng.random_range(0..=bounds.hard_new_courses as usize).min(mine.len());
        for &c in &mine[fresh..] {
            taught_last_year.insert((s, c));
        }
        let extra = bounds.hard_courses_per_ta as usize - (mine.len() - fresh).min(bounds.hard_courses_per_ta as usize);
        for _ in 0..extra {
            if rng.random_bool(0.5) {
                taught_last_year.insert((s, rng.random_range(0..spec.n_courses)));
            }
        }
    }

    let mut pairs = Vec::new();
    for s in 0..spec.n_tas {
        for c in 0..spec.n_courses {
            let planted = staff[c].contains(&s);
            let kappa = taught_last_year.contains(&(s, c));
            let preference = if rng.random_bool(0.15) { *[-1, 1].choose(&mut rng).unwrap() } else { 0 };
            let forbidden = !planted && !kappa && rng.random_bool(0.03);
            if preference != 0 || forbidden || kappa {
                pairs.push(PairFile {
                    ta: tas[s].id.clone(),
                    course: format!("c{c:02}"),
                    preference,
                    forbidden,
                    taught_last_year: kappa,
                });
            }
        }
    }

    let file = InstanceFile {
        label: format!("synthetic-{}x{}x{}-r{}-s{}", spec.n_tas, spec.n_courses, spec.max_tasks_per_course, spec.demand_to_capacity_ratio, spec.seed),
        bounds: BoundsFile::from_config(&bounds),
        weights: WeightsFile::from_config(&WeightConfig::default()),
        tas,
        courses,
        pairs,
        pins: Vec::new(),
    };
    let instance = Instance::from_file(file).expect("generated instances are valid");
    let mut planted = Assignment::empty(&instance);
    for (s, per_course) in hours.iter().enumerate() {
        for (c, per_kind) in per_course.iter().enumerate() {
            for (code, &h) in per_kind.iter().enumerate() {
                if h > 0 {
                    let kind = instance.kind_position(TaskKind::ALL[code]).expect("planted kinds are present");
                    planted.set_hours(s, c, kind, h);
                }
            }
        }
    }
    Ok(Generated { instance, planted })
}

/// `total` split into `parts` random pieces of at least `least` each, or
/// fewer pieces when `total` is too small.
fn split(rng: &mut impl Rng, total: i64, parts: usize, least: i64) -> Vec<i64> {
    let parts = parts.min((total / least.max(1)).max(1) as usize);
    if parts == 0 {
        return Vec::new();
    }
    let spare = total - least * parts as i64;
    if spare < 0 {
        return vec![total];
    }
    let mut cuts: Vec<i64> = (0..parts - 1).map(|_| rng.random_range(0..=spare)).collect();
    cuts.push(0);
    cuts.push(spare);
    cuts.sort();
    cuts.windows(2).map(|w| least + w[1] - w[0]).collect()
}

/// A random instance small enough for exhaustive search: up to 4 TAs,
/// 3 courses, 2 tasks per course and 12 hours per task, with randomized
/// bounds, weights and penalty mode.
pub fn small(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_tas = rng.random_range(1..=4);
    let n_courses = rng.random_range(1..=3);
    let annual_full_load = 20;
    let tas = (0..n_tas)
        .map(|s| TaFile {
            id: format!("t{s}"),
            year: rng.random_range(1..=5),
            employment_fraction: rng.random_range(0..=5) as f64 / 10.0,
            carryover_hours: rng.random_range(-3..=6),
            target_hours: None,
        })
        .collect();
    let kinds = [TaskKind::ExerciseSession, TaskKind::LabSession, TaskKind::ExamEvaluation];
    let courses = (0..n_courses)
        .map(|c| {
            let mut tasks = vec![TaskFile { kind: TaskKind::Admin, total_hours: rng.random_range(1..=6), required_tas: 1 }];
            if rng.random_bool(0.5) {
                let tau = rng.random_range(1..=12);
                tasks.push(TaskFile {
                    kind: *kinds.choose(&mut rng).unwrap(),
                    total_hours: tau,
                    required_tas: rng.random_range(1..=2.min(n_tas as i64)),
                });
            }
            CourseFile { id: format!("k{c}"), tasks }
        })
        .collect();
    let mut pairs = Vec::new();
    for s in 0..n_tas {
        for c in 0..n_courses {
            let preference = rng.random_range(-1..=1);
            let forbidden = rng.random_bool(0.1);
            let taught_last_year = rng.random_bool(0.4);
            if preference != 0 || forbidden || taught_last_year {
                pairs.push(PairFile { ta: format!("t{s}"), course: format!("k{c}"), preference, forbidden, taught_last_year });
            }
        }
    }
    let hard_dev = rng.random_range(3..=15);
    let hard_courses_per_ta = rng.random_range(1..=3);
    let hard_new_courses = rng.random_range(0..=2).max(rng.random_range(0..=2));
    let bounds = BoundConfig {
        soft_dev: rng.random_range(0..=hard_dev),
        soft_new_courses: rng.random_range(0..=hard_new_courses),
        soft_courses_per_ta: rng.random_range(0..=hard_courses_per_ta),
        soft_extra_tas_per_task: rng.random_range(0..=1),
        min_task_hours: rng.random_range(1..=3),
        annual_full_load,
        ..BoundConfig::from_hard(hard_dev, hard_courses_per_ta, rng.random_range(1..=4), hard_new_courses)
    };
    let weights = WeightConfig {
        w_target5: rng.random_range(0..=30),
        w_soft_dev: rng.random_range(0..=30),
        w_soft_new: rng.random_range(0..=5),
        w_soft_staff: rng.random_range(0..=5),
        w_soft_courses: rng.random_range(0..=5),
        w_pref_positive: rng.random_range(0..=3),
        w_pref_negative: rng.random_range(0..=3),
        penalty_mode: if rng.random_bool(0.5) { PenaltyMode::Indicator } else { PenaltyMode::Magnitude },
    };
    let file = InstanceFile {
        label: format!("small-{seed}"),
        bounds: BoundsFile::from_config(&bounds),
        weights: WeightsFile::from_config(&weights),
        tas,
        courses,
        pairs,
        pins: Vec::new(),
    };
    Instance::from_file(file).expect("small instances are valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::capacity_report;
    use crate::verify::{check, CheckMode};

    #[test]
    fn rejects_bad_specs() {
        assert_eq!(generate(&GenSpec::new(0, 1, 1, 1.0, 0)).unwrap_err(), SpecError::NonPositive("n_tas"));
        assert_eq!(generate(&GenSpec::new(1, 1, 11, 1.0, 0)).unwrap_err(), SpecError::TooManyTasks { max: 10 });
        assert!(matches!(generate(&GenSpec::new(1, 1, 1, 1.3, 0)), Err(SpecError::Ratio(_))));
        assert!(matches!(generate(&GenSpec::new(1, 1, 1, 0.0, 0)), Err(SpecError::Ratio(_))));
    }

    #[test]
    fn one_by_one_is_valid_and_reloads() {
        let inst = generate(&GenSpec::new(1, 1, 1, 1.0, 7)).unwrap();
        assert_eq!((inst.n_tas(), inst.n_courses()), (1, 1));
        assert_eq!(Instance::from_json(&inst.to_json()).unwrap(), inst);
    }

    #[test]
    fn same_seed_same_bytes() {
        let spec = GenSpec::new(12, 9, 4, 0.9, 3);
        assert_eq!(generate(&spec).unwrap().to_json(), generate(&spec).unwrap().to_json());
        assert_ne!(generate(&spec).unwrap().to_json(), generate(&GenSpec { seed: 4, ..spec }).unwrap().to_json());
    }

    #[test]
    fn full_scale_has_slack_and_a_feasible_plant() {
        let g = generate_planted(&GenSpec::new(50, 45, 10, 0.9, 1)).unwrap();
        assert!(capacity_report(&g.instance).slack > 0);
        let v = check(&g.instance, &g.planted, CheckMode::Audit).unwrap();
        assert!(v.hard_violations.is_empty(), "{:?}", &v.hard_violations[..v.hard_violations.len().min(3)]);
    }

    #[test]
    fn demand_tracks_the_ratio() {
        for seed in 0..5 {
            let g = generate_planted(&GenSpec::new(20, 15, 5, 0.8, seed)).unwrap();
            let targets: i64 = g.instance.tas().iter().map(|t| t.target_hours).sum();
            let demand = g.instance.total_demand();
            let wanted = (0.8 * targets as f64).round() as i64;
            assert!((demand - wanted).abs() <= 60, "demand {demand} vs {wanted}");
        }
    }

    #[test]
    fn split_respects_minimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for total in 0..40 {
            for parts in 1..4 {
                let pieces = split(&mut rng, total, parts, 5);
                assert_eq!(pieces.iter().sum::<i64>(), total);
                assert!(pieces.len() == 1 || pieces.iter().all(|&p| p >= 5));
            }
        }
    }

    #[test]
    fn small_instances_are_small() {
        for seed in 0..50 {
            let inst = small(seed);
            assert!(inst.n_tas() <= 4 && inst.n_courses() <= 3);
            for c in 0..inst.n_courses() {
                for k in 0..inst.n_kinds() {
                    assert!(inst.task_hours(c, k) <= 12);
                }
            }
        }
    }
}

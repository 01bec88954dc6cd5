//! Search-oriented view of an instance: present tasks, admissible
//! (TA, task) edges and the cost tables the search and the hour
//! distribution share.

use crate::instance::{BoundConfig, Instance, PenaltyMode, PinTarget, TaskKind, WeightConfig};

#[derive(Debug, Clone)]
pub(crate) struct Task {
    pub course: usize,
    pub kind: usize,
    pub tau: i64,
    pub rho: i64,
    /// Staffing the task needs: `max(rho, 1)`.
    pub need: usize,
    pub admin: bool,
    pub edges: Vec<usize>,
}

#[derive(Debug, Clone)]
pub(crate) struct Ta {
    pub target: i64,
    /// Hard window on total hours.
    pub lo: i64,
    pub hi: i64,
    pub fifth_year: bool,
    pub edges: Vec<usize>,
}

#[derive(Debug, Clone)]
pub(crate) struct Edge {
    pub ta: usize,
    pub task: usize,
    pub course: usize,
    /// Hours when taught.
    pub lo: i64,
    pub hi: i64,
    /// Pinned value of the assignment boolean.
    pub fixed: Option<bool>,
    pub kappa: bool,
    pub preference: i8,
}

#[derive(Debug, Clone)]
pub(crate) struct Problem {
    pub n_tas: usize,
    pub n_courses: usize,
    pub n_kinds: usize,
    pub bounds: BoundConfig,
    pub weights: WeightConfig,
    pub mode: PenaltyMode,
    pub tasks: Vec<Task>,
    pub tas: Vec<Ta>,
    pub edges: Vec<Edge>,
    /// `|S| x |C|`: edges of a TA on a course.
    pub pair_edges: Vec<Vec<usize>>,
    pub kappa: Vec<bool>,
    pub preference: Vec<i8>,
    pub pinned_pairs: Vec<bool>,
    /// `|C|`: TAs with at least one edge on the course.
    pub course_tas: Vec<Vec<usize>>,
    /// Contradiction visible before any search.
    pub root_conflict: bool,
}

impl Problem {
    pub fn new(instance: &Instance) -> Problem {
        let (n_s, n_c, n_k) = (instance.n_tas(), instance.n_courses(), instance.n_kinds());
        let bounds = *instance.bounds();
        let weights = *instance.weights();
        let mut root_conflict = false;

        let mut pin_hours = vec![None; instance.n_cells()];
        let mut pinned_pairs = vec![false; n_s * n_c];
        for pin in instance.pins() {
            match pin.target {
                PinTarget::Course => pinned_pairs[pin.ta * n_c + pin.course] = true,
                PinTarget::Hours { kind, hours } => pin_hours[instance.cell(pin.ta, pin.course, kind)] = Some(hours),
            }
        }

        let mut tasks = Vec::new();
        for c in 0..n_c {
            for k in 0..n_k {
                let tau = instance.task_hours(c, k);
                if tau == 0 {
                    for s in 0..n_s {
                        if pin_hours[instance.cell(s, c, k)].is_some_and(|h| h != 0) {
                            root_conflict = true;
                        }
                    }
                    continue;
                }
                let rho = instance.required_tas(c, k);
                tasks.push(Task {
                    course: c,
                    kind: k,
                    tau,
                    rho,
                    need: rho.max(1) as usize,
                    admin: instance.kinds()[k] == TaskKind::Admin,
                    edges: Vec::new(),
                });
            }
        }

        let mut tas: Vec<Ta> = instance
            .tas()
            .iter()
            .enumerate()
            .map(|(s, ta)| {
                let target = instance.target(s);
                Ta {
                    target,
                    lo: (target - bounds.hard_dev).max(0),
                    hi: target + bounds.hard_dev,
                    fifth_year: ta.year >= 5,
                    edges: Vec::new(),
                }
            })
            .collect();
        if tas.iter().any(|t| t.hi < 0) {
            root_conflict = true;
        }

        let mut edges = Vec::new();
        let mut pair_edges = vec![Vec::new(); n_s * n_c];
        let mut kappa = vec![false; n_s * n_c];
        let mut preference = vec![0; n_s * n_c];
        for s in 0..n_s {
            for c in 0..n_c {
                let pair = instance.pair(s, c);
                kappa[s * n_c + c] = pair.taught_last_year;
                preference[s * n_c + c] = pair.preference;
            }
        }
        for (t, task) in tasks.iter_mut().enumerate() {
            let least = task.tau.min(bounds.min_task_hours).max(1);
            for (s, ta) in tas.iter_mut().enumerate() {
                let pair = instance.pair(s, task.course);
                let pinned = pin_hours[instance.cell(s, task.course, task.kind)];
                if pair.forbidden {
                    if pinned.is_some_and(|h| h != 0) {
                        root_conflict = true;
                    }
                    continue;
                }
                let (lo, hi, fixed) = match pinned {
                    None => (least, task.tau, None),
                    Some(0) => continue,
                    Some(h) => {
                        if h < least || h > task.tau {
                            root_conflict = true;
                        }
                        (h, h, Some(true))
                    }
                };
                let e = edges.len();
                edges.push(Edge {
                    ta: s,
                    task: t,
                    course: task.course,
                    lo,
                    hi,
                    fixed,
                    kappa: pair.taught_last_year,
                    preference: pair.preference,
                });
                task.edges.push(e);
                ta.edges.push(e);
                pair_edges[s * n_c + task.course].push(e);
            }
        }
        let course_tas = (0..n_c).map(|c| (0..n_s).filter(|&s| !pair_edges[s * n_c + c].is_empty()).collect()).collect();

        Problem {
            n_tas: n_s,
            n_courses: n_c,
            n_kinds: n_k,
            bounds,
            weights,
            mode: weights.penalty_mode,
            tasks,
            tas,
            edges,
            pair_edges,
            kappa,
            preference,
            pinned_pairs,
            course_tas,
            root_conflict,
        }
    }

    pub fn pair(&self, ta: usize, course: usize) -> usize {
        ta * self.n_courses + course
    }

    /// Penalty units for an excess under the active mode.
    pub fn units(&self, excess: i64) -> i64 {
        match self.mode {
            PenaltyMode::Indicator => (excess > 0) as i64,
            PenaltyMode::Magnitude => excess.max(0),
        }
    }

    /// Soft cost of a TA working `hours`.
    pub fn hour_cost(&self, ta: usize, hours: i64) -> i64 {
        self.deviation_cost(ta, (hours - self.tas[ta].target).abs())
    }

    /// Soft cost of a TA whose total is `dev` hours away from target.
    pub fn deviation_cost(&self, ta: usize, dev: i64) -> i64 {
        let w = &self.weights;
        let mut cost = w.w_soft_dev * self.units(dev - self.bounds.soft_dev);
        if self.tas[ta].fifth_year {
            cost += w.w_target5 * self.units(dev);
        }
        cost
    }

    /// Convex surrogate of [`Problem::hour_cost`]; equal to it in
    /// magnitude mode.
    pub fn surrogate_cost(&self, ta: usize, hours: i64) -> i64 {
        let w = &self.weights;
        let dev = (hours - self.tas[ta].target).abs();
        let mut cost = w.w_soft_dev * (dev - self.bounds.soft_dev).max(0);
        if self.tas[ta].fifth_year {
            cost += w.w_target5 * dev;
        }
        cost
    }

    /// Soft cost that depends only on who teaches what.
    pub fn structure_cost(&self, y: &[bool]) -> i64 {
        let w = &self.weights;
        let b = &self.bounds;
        let mut cost = 0;
        for task in &self.tasks {
            let staff = task.edges.iter().filter(|&&e| y[e]).count() as i64;
            cost += w.w_soft_staff * self.units(staff - task.rho - b.soft_extra_tas_per_task);
        }
        for s in 0..self.n_tas {
            let mut courses = 0;
            let mut fresh = 0;
            for c in 0..self.n_courses {
                let p = self.pair(s, c);
                let taught = self.pair_edges[p].iter().any(|&e| y[e]);
                if taught {
                    courses += 1;
                    fresh += (!self.kappa[p]) as i64;
                }
                match self.preference[p] {
                    1 if !taught => cost += w.w_pref_positive,
                    -1 if taught => cost += w.w_pref_negative,
                    _ => {}
                }
            }
            cost += w.w_soft_new * self.units(fresh - b.soft_new_courses);
            cost += w.w_soft_courses * self.units(courses - b.soft_courses_per_ta);
        }
        cost
    }

    /// Dense hours in `(ta, course, kind)` order from per-edge hours.
    pub fn dense_hours(&self, edge_hours: &[i64]) -> Vec<i64> {
        let mut hours = vec![0; self.n_tas * self.n_courses * self.n_kinds];
        for (e, edge) in self.edges.iter().enumerate() {
            let task = &self.tasks[edge.task];
            hours[(edge.ta * self.n_courses + task.course) * self.n_kinds + task.kind] = edge_hours[e];
        }
        hours
    }
}

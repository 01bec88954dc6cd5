//! Partial assignment of the teaching booleans with trail-based undo,
//! bound propagation and an admissible lower bound.

use super::problem::Problem;

pub(crate) const UNKNOWN: i8 = -1;

#[derive(Clone)]
pub(crate) struct State<'a> {
    p: &'a Problem,
    pub y: Vec<i8>,
    trail: Vec<usize>,
    task_one: Vec<usize>,
    task_open: Vec<usize>,
    task_lo: Vec<i64>,
    task_avail: Vec<i64>,
    ta_lo: Vec<i64>,
    ta_hi: Vec<i64>,
    ta_courses: Vec<i64>,
    ta_fresh: Vec<i64>,
    pair_one: Vec<usize>,
    pair_open: Vec<usize>,
    course_tas: Vec<i64>,
    pending: Vec<(usize, bool)>,
    pub propagations: u64,
}

impl<'a> State<'a> {
    pub fn new(p: &'a Problem) -> Self {
        let mut task_avail = vec![0; p.tasks.len()];
        let mut ta_hi = vec![0; p.n_tas];
        let mut pair_open = vec![0; p.n_tas * p.n_courses];
        for edge in &p.edges {
            task_avail[edge.task] += edge.hi;
            ta_hi[edge.ta] += edge.hi;
            pair_open[p.pair(edge.ta, edge.course)] += 1;
        }
        State {
            p,
            y: vec![UNKNOWN; p.edges.len()],
            trail: Vec::with_capacity(p.edges.len()),
            task_one: vec![0; p.tasks.len()],
            task_open: p.tasks.iter().map(|t| t.edges.len()).collect(),
            task_lo: vec![0; p.tasks.len()],
            task_avail,
            ta_lo: vec![0; p.n_tas],
            ta_hi,
            ta_courses: vec![0; p.n_tas],
            ta_fresh: vec![0; p.n_tas],
            pair_one: vec![0; p.n_tas * p.n_courses],
            pair_open,
            course_tas: vec![0; p.n_courses],
            pending: Vec::new(),
            propagations: 0,
        }
    }

    /// Applies pins and checks every entity once. False on contradiction.
    pub fn root(&mut self) -> bool {
        let p = self.p;
        if p.root_conflict {
            return false;
        }
        self.pending.clear();
        for (e, edge) in p.edges.iter().enumerate() {
            if let Some(v) = edge.fixed {
                self.pending.push((e, v));
            }
        }
        let mut ok = true;
        for t in 0..p.tasks.len() {
            ok &= self.check_task(t);
        }
        for s in 0..p.n_tas {
            ok &= self.check_ta(s);
        }
        for pair in 0..p.n_tas * p.n_courses {
            ok &= self.check_pair(pair);
        }
        for c in 0..p.n_courses {
            ok &= self.check_course(c);
        }
        ok && self.drain()
    }

    pub fn mark(&self) -> usize {
        self.trail.len()
    }

    pub fn undo_to(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let e = self.trail.pop().unwrap();
            self.apply(e, self.y[e] == 1, -1);
            self.y[e] = UNKNOWN;
        }
    }

    /// Sets `y[e] = value` and propagates. False on contradiction; the
    /// caller undoes to its mark.
    pub fn decide(&mut self, e: usize, value: bool) -> bool {
        self.pending.clear();
        self.pending.push((e, value));
        self.drain()
    }

    /// Sets several booleans at once, then propagates.
    pub fn decide_all(&mut self, values: impl IntoIterator<Item = (usize, bool)>) -> bool {
        self.pending.clear();
        self.pending.extend(values);
        self.drain()
    }

    fn drain(&mut self) -> bool {
        while let Some((e, v)) = self.pending.pop() {
            match self.y[e] {
                UNKNOWN => {}
                current if (current == 1) == v => continue,
                _ => return false,
            }
            self.y[e] = v as i8;
            self.trail.push(e);
            self.apply(e, v, 1);
            self.propagations += 1;
            let edge = &self.p.edges[e];
            let (t, s, c) = (edge.task, edge.ta, edge.course);
            if !(self.check_task(t) && self.check_ta(s) && self.check_pair(self.p.pair(s, c)) && self.check_course(c)) {
                return false;
            }
        }
        true
    }

    fn apply(&mut self, e: usize, value: bool, sign: i64) {
        let p = self.p;
        let edge = &p.edges[e];
        let pair = p.pair(edge.ta, edge.course);
        let su = sign as isize;
        self.task_open[edge.task] = (self.task_open[edge.task] as isize - su) as usize;
        self.pair_open[pair] = (self.pair_open[pair] as isize - su) as usize;
        if value {
            self.task_one[edge.task] = (self.task_one[edge.task] as isize + su) as usize;
            self.task_lo[edge.task] += sign * edge.lo;
            self.ta_lo[edge.ta] += sign * edge.lo;
            let before = self.pair_one[pair];
            self.pair_one[pair] = (before as isize + su) as usize;
            let after = self.pair_one[pair];
            if (before == 0) != (after == 0) {
                self.ta_courses[edge.ta] += sign;
                if !p.kappa[pair] {
                    self.ta_fresh[edge.ta] += sign;
                }
                self.course_tas[edge.course] += sign;
            }
        } else {
            self.task_avail[edge.task] -= sign * edge.hi;
            self.ta_hi[edge.ta] -= sign * edge.hi;
        }
    }

    fn check_task(&mut self, t: usize) -> bool {
        let p = self.p;
        let task = &p.tasks[t];
        let (one, open) = (self.task_one[t], self.task_open[t]);
        if self.task_lo[t] > task.tau || self.task_avail[t] < task.tau || one + open < task.need {
            return false;
        }
        if task.admin && one > 1 {
            return false;
        }
        if open == 0 {
            return true;
        }
        let close_all = task.admin && one == 1;
        let take_all = one < task.need && one + open == task.need;
        for &e in &task.edges {
            if self.y[e] != UNKNOWN {
                continue;
            }
            let edge = &p.edges[e];
            if close_all || self.task_lo[t] + edge.lo > task.tau {
                self.pending.push((e, false));
            } else if take_all || self.task_avail[t] - edge.hi < task.tau {
                self.pending.push((e, true));
            }
        }
        true
    }

    fn check_ta(&mut self, s: usize) -> bool {
        let p = self.p;
        let ta = &p.tas[s];
        let b = &p.bounds;
        if self.ta_lo[s] > ta.hi
            || self.ta_hi[s] < ta.lo
            || self.ta_courses[s] > b.hard_courses_per_ta
            || self.ta_fresh[s] > b.hard_new_courses
        {
            return false;
        }
        let full = self.ta_courses[s] == b.hard_courses_per_ta;
        let fresh_full = self.ta_fresh[s] == b.hard_new_courses;
        for &e in &ta.edges {
            if self.y[e] != UNKNOWN {
                continue;
            }
            let edge = &p.edges[e];
            let pair = p.pair(s, edge.course);
            let opens_course = self.pair_one[pair] == 0;
            if self.ta_lo[s] + edge.lo > ta.hi || (opens_course && (full || (fresh_full && !p.kappa[pair]))) {
                self.pending.push((e, false));
            } else if self.ta_hi[s] - edge.hi < ta.lo {
                self.pending.push((e, true));
            }
        }
        true
    }

    fn check_pair(&mut self, pair: usize) -> bool {
        if !self.p.pinned_pairs[pair] || self.pair_one[pair] > 0 {
            return true;
        }
        match self.pair_open[pair] {
            0 => false,
            1 => {
                let e = *self.p.pair_edges[pair].iter().find(|&&e| self.y[e] == UNKNOWN).unwrap();
                self.pending.push((e, true));
                true
            }
            _ => true,
        }
    }

    fn check_course(&mut self, c: usize) -> bool {
        let p = self.p;
        let cap = p.bounds.hard_tas_per_course;
        if self.course_tas[c] > cap {
            return false;
        }
        if self.course_tas[c] == cap {
            for &s in &p.course_tas[c] {
                let pair = p.pair(s, c);
                if self.pair_one[pair] == 0 && self.pair_open[pair] > 0 {
                    for &e in &p.pair_edges[pair] {
                        if self.y[e] == UNKNOWN {
                            self.pending.push((e, false));
                        }
                    }
                }
            }
        }
        true
    }

    /// Penalty already forced by the decided booleans plus the least hour
    /// cost each TA can still reach.
    pub fn bound(&self) -> i64 {
        let p = self.p;
        let w = &p.weights;
        let b = &p.bounds;
        let mut cost = 0;
        for (t, task) in p.tasks.iter().enumerate() {
            cost += w.w_soft_staff * p.units(self.task_one[t] as i64 - task.rho - b.soft_extra_tas_per_task);
        }
        for (s, ta) in p.tas.iter().enumerate() {
            cost += w.w_soft_new * p.units(self.ta_fresh[s] - b.soft_new_courses);
            cost += w.w_soft_courses * p.units(self.ta_courses[s] - b.soft_courses_per_ta);
            let lo = self.ta_lo[s].max(ta.lo);
            let hi = self.ta_hi[s].min(ta.hi);
            let dev = if ta.target < lo {
                lo - ta.target
            } else if ta.target > hi {
                ta.target - hi
            } else {
                0
            };
            cost += p.deviation_cost(s, dev);
        }
        for pair in 0..p.n_tas * p.n_courses {
            match p.preference[pair] {
                1 if self.pair_one[pair] == 0 && self.pair_open[pair] == 0 => cost += w.w_pref_positive,
                -1 if self.pair_one[pair] > 0 => cost += w.w_pref_negative,
                _ => {}
            }
        }
        cost
    }

    /// Next boolean to branch on and the value to try first.
    pub fn branch(&self) -> Option<(usize, bool)> {
        let p = self.p;
        let t = (0..p.tasks.len())
            .filter(|&t| self.task_open[t] > 0)
            .min_by_key(|&t| (self.task_one[t] >= p.tasks[t].need, self.task_open[t], t))?;
        let e = p.tasks[t]
            .edges
            .iter()
            .copied()
            .filter(|&e| self.y[e] == UNKNOWN)
            .min_by_key(|&e| {
                let edge = &p.edges[e];
                let pair = p.pair(edge.ta, edge.course);
                let deficit = p.tas[edge.ta].target - self.ta_lo[edge.ta];
                (!edge.kappa, edge.preference != 1, self.pair_one[pair] == 0, -deficit, edge.ta)
            })?;
        Some((e, self.task_one[t] < p.tasks[t].need))
    }

    pub fn values(&self) -> Vec<bool> {
        self.y.iter().map(|&v| v == 1).collect()
    }
}

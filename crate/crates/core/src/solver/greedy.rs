//! Greedy construction: tasks in order of scarcity, each filled by the TAs
//! furthest below target, then a repair loop driven by a relaxed hour
//! distribution.

use super::flow::Network;
use super::leaf::{Leaf, LeafSolver};
use super::problem::Problem;
use super::state::State;

const FORCED: i128 = 1 << 60;
const STEER: i128 = 1 << 20;
const UNSHIPPED: i64 = 1000;

struct Greedy<'a> {
    p: &'a Problem,
    y: Vec<bool>,
    load: Vec<i64>,
    courses: Vec<i64>,
    fresh: Vec<i64>,
    pair_one: Vec<usize>,
    course_tas: Vec<i64>,
}

impl<'a> Greedy<'a> {
    fn new(p: &'a Problem) -> Self {
        Greedy {
            p,
            y: vec![false; p.edges.len()],
            load: vec![0; p.n_tas],
            courses: vec![0; p.n_tas],
            fresh: vec![0; p.n_tas],
            pair_one: vec![0; p.n_tas * p.n_courses],
            course_tas: vec![0; p.n_courses],
        }
    }

    /// Whether TA of `e` may take it without breaking a per-TA or per-course
    /// limit.
    fn admissible(&self, e: usize) -> bool {
        let p = self.p;
        let edge = &p.edges[e];
        let pair = p.pair(edge.ta, edge.course);
        if self.y[e] {
            return false;
        }
        if self.pair_one[pair] > 0 {
            return true;
        }
        let b = &p.bounds;
        self.courses[edge.ta] < b.hard_courses_per_ta
            && (p.kappa[pair] || self.fresh[edge.ta] < b.hard_new_courses)
            && self.course_tas[edge.course] < b.hard_tas_per_course
    }

    fn take(&mut self, e: usize, hours: i64) {
        let p = self.p;
        let edge = &p.edges[e];
        let pair = p.pair(edge.ta, edge.course);
        self.y[e] = true;
        self.load[edge.ta] += hours;
        if self.pair_one[pair] == 0 {
            self.courses[edge.ta] += 1;
            self.fresh[edge.ta] += (!p.kappa[pair]) as i64;
            self.course_tas[edge.course] += 1;
        }
        self.pair_one[pair] += 1;
    }

    fn drop_edge(&mut self, e: usize) {
        let p = self.p;
        let edge = &p.edges[e];
        let pair = p.pair(edge.ta, edge.course);
        self.y[e] = false;
        self.pair_one[pair] -= 1;
        if self.pair_one[pair] == 0 {
            self.courses[edge.ta] -= 1;
            self.fresh[edge.ta] -= (!p.kappa[pair]) as i64;
            self.course_tas[edge.course] -= 1;
        }
    }

    /// Adds or removes one edge for each TA whose relaxed total falls outside
    /// its window. False when nothing could be changed.
    fn repair(&mut self, totals: &[i64]) -> bool {
        let p = self.p;
        let mut changed = false;
        let mut order: Vec<usize> = (0..p.n_tas).collect();
        order.sort_by_key(|&s| (-(p.tas[s].lo - totals[s]).max(totals[s] - p.tas[s].hi), s));
        for s in order {
            let ta = &p.tas[s];
            if totals[s] < ta.lo {
                changed |= self.grow(s, totals);
            } else if totals[s] > ta.hi {
                changed |= self.shrink(s, totals);
            }
        }
        changed
    }

    /// Gives an under-loaded TA another task, takes a co-worker off one of
    /// its tasks, or lets it take over a co-worker's task.
    fn grow(&mut self, s: usize, totals: &[i64]) -> bool {
        let p = self.p;
        let join = p.tas[s]
            .edges
            .iter()
            .copied()
            .filter(|&e| self.admissible(e) && self.slack(p.edges[e].task) >= p.edges[e].lo)
            .filter(|&e| !(p.tasks[p.edges[e].task].admin && self.staff(p.edges[e].task) > 0))
            .min_by_key(|&e| {
                let edge = &p.edges[e];
                (self.pair_one[p.pair(s, edge.course)] == 0, -p.tasks[edge.task].tau, e)
            });
        if let Some(e) = join {
            self.take(e, 0);
            return true;
        }
        let leave = p.tas[s]
            .edges
            .iter()
            .filter(|&&e| self.y[e])
            .flat_map(|&e| p.tasks[p.edges[e].task].edges.iter().copied())
            .filter(|&o| {
                let other = &p.edges[o];
                other.ta != s
                    && self.y[o]
                    && other.fixed.is_none()
                    && self.staff(other.task) > p.tasks[other.task].need
                    && totals[other.ta] - other.lo >= p.tas[other.ta].lo
            })
            .max_by_key(|&o| (totals[p.edges[o].ta] - p.tas[p.edges[o].ta].target, std::cmp::Reverse(o)));
        if let Some(o) = leave {
            self.drop_edge(o);
            return true;
        }
        let over = p.tas[s]
            .edges
            .iter()
            .copied()
            .filter(|&e| self.admissible(e))
            .flat_map(|e| p.tasks[p.edges[e].task].edges.iter().map(move |&o| (e, o)))
            .filter(|&(_, o)| {
                let other = &p.edges[o];
                other.ta != s && self.y[o] && other.fixed.is_none() && totals[other.ta] > p.tas[other.ta].lo
            })
            .max_by_key(|&(e, o)| (totals[p.edges[o].ta] - p.tas[p.edges[o].ta].lo, p.tasks[p.edges[e].task].tau, std::cmp::Reverse(o)));
        if let Some((e, o)) = over {
            self.drop_edge(o);
            self.take(e, 0);
            return true;
        }
        false
    }

    /// Takes an over-loaded TA off a task, brings in a co-worker with room,
    /// or hands one of its tasks to such a co-worker.
    fn shrink(&mut self, s: usize, totals: &[i64]) -> bool {
        let p = self.p;
        let leave = p.tas[s]
            .edges
            .iter()
            .copied()
            .filter(|&e| self.y[e] && p.edges[e].fixed.is_none())
            .filter(|&e| self.staff(p.edges[e].task) > p.tasks[p.edges[e].task].need)
            .max_by_key(|&e| (p.edges[e].hi, e));
        if let Some(e) = leave {
            self.drop_edge(e);
            return true;
        }
        let join = p.tas[s]
            .edges
            .iter()
            .filter(|&&e| self.y[e] && !p.tasks[p.edges[e].task].admin)
            .flat_map(|&e| p.tasks[p.edges[e].task].edges.iter().copied())
            .filter(|&o| {
                let other = &p.edges[o];
                other.ta != s && self.admissible(o) && self.slack(other.task) >= other.lo && totals[other.ta] + other.lo <= p.tas[other.ta].hi
            })
            .max_by_key(|&o| {
                let other = &p.edges[o];
                (self.pair_one[p.pair(other.ta, other.course)] > 0, p.tas[other.ta].target - totals[other.ta], std::cmp::Reverse(o))
            });
        if let Some(o) = join {
            self.take(o, 0);
            return true;
        }
        let hand = p.tas[s]
            .edges
            .iter()
            .copied()
            .filter(|&e| self.y[e] && p.edges[e].fixed.is_none())
            .flat_map(|e| p.tasks[p.edges[e].task].edges.iter().map(move |&o| (e, o)))
            .filter(|&(e, o)| {
                let other = &p.edges[o];
                other.ta != s && self.admissible(o) && totals[other.ta] + other.lo <= p.tas[other.ta].hi && {
                    let t = other.task;
                    self.slack(t) + p.edges[e].lo >= other.lo
                }
            })
            .max_by_key(|&(e, o)| (p.tas[p.edges[o].ta].hi - totals[p.edges[o].ta], p.edges[e].hi, std::cmp::Reverse(o)));
        if let Some((e, o)) = hand {
            self.drop_edge(e);
            self.take(o, 0);
            return true;
        }
        false
    }

    /// Adds TAs to tasks below their required staffing, preferring TAs
    /// already on the course and then those with the most room. False when
    /// some task cannot be staffed.
    fn fill_staff(&mut self, totals: &[i64]) -> bool {
        let p = self.p;
        let mut ok = true;
        for t in 0..p.tasks.len() {
            while self.staff(t) < p.tasks[t].need {
                let pick = p.tasks[t]
                    .edges
                    .iter()
                    .copied()
                    .filter(|&e| self.admissible(e) && self.slack(t) >= p.edges[e].lo)
                    .max_by_key(|&e| {
                        let s = p.edges[e].ta;
                        (self.pair_one[p.pair(s, p.edges[e].course)] > 0, p.tas[s].hi - totals[s], std::cmp::Reverse(e))
                    });
                match pick {
                    Some(e) => self.take(e, 0),
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
        }
        ok
    }

    fn staff(&self, t: usize) -> usize {
        self.p.tasks[t].edges.iter().filter(|&&e| self.y[e]).count()
    }

    /// Hours of the task not needed for the minimum of its current staff.
    fn slack(&self, t: usize) -> i64 {
        let p = self.p;
        p.tasks[t].tau - p.tasks[t].edges.iter().filter(|&&e| self.y[e]).map(|&e| p.edges[e].lo).sum::<i64>()
    }
}

/// Checks the structural rules by replaying `y` through propagation.
pub(crate) fn consistent(p: &Problem, y: &[bool]) -> bool {
    let mut st = State::new(p);
    st.root() && st.decide_all(y.iter().enumerate().map(|(e, &v)| (e, v)))
}

/// Hours per (TA, course) pair from a transportation plan over the allowed
/// pairs: every course's hours are shipped, TAs are filled to their window
/// floor first and to their target next, continuing and preferred pairs are
/// cheaper.
fn pair_plan(p: &Problem, allowed: &[bool]) -> Vec<i64> {
    let (n_s, n_c) = (p.n_tas, p.n_courses);
    let sink = n_s + n_c + 1;
    let mut net = Network::new(sink + 1);
    let mut demand = vec![0i64; n_c];
    for t in &p.tasks {
        demand[t.course] += t.tau;
    }
    for (s, ta) in p.tas.iter().enumerate() {
        let target = ta.target.clamp(ta.lo, ta.hi);
        net.add(0, 1 + s, ta.lo, -FORCED);
        net.add(0, 1 + s, target - ta.lo, -STEER);
        net.add(0, 1 + s, ta.hi - target, STEER);
    }
    let mut arcs = vec![None; n_s * n_c];
    for s in 0..n_s {
        for c in 0..n_c {
            let pair = p.pair(s, c);
            if allowed[pair] {
                let cost = if p.kappa[pair] { 0 } else { 10 } - 3 * p.preference[pair] as i128;
                arcs[pair] = Some(net.add(1 + s, 1 + n_s + c, demand[c], cost));
            }
        }
    }
    for (c, &d) in demand.iter().enumerate() {
        net.add(1 + n_s + c, sink, d, -FORCED);
    }
    net.min_cost_max_flow(0, sink);
    arcs.iter().map(|a| a.map_or(0, |id| net.flow(id))).collect()
}

/// Pair plan that respects the per-TA and per-course limits: TAs over a
/// limit keep their strongest pairs and lose the rest, until no limit is
/// exceeded.
fn limited_plan(p: &Problem) -> Vec<i64> {
    let (n_s, n_c) = (p.n_tas, p.n_courses);
    let b = &p.bounds;
    let mut allowed: Vec<bool> = (0..n_s * n_c).map(|pair| !p.pair_edges[pair].is_empty()).collect();
    loop {
        let flow = pair_plan(p, &allowed);
        let mut changed = false;
        for s in 0..n_s {
            let mut mine: Vec<usize> = (0..n_c).filter(|&c| flow[p.pair(s, c)] > 0).collect();
            mine.sort_by_key(|&c| (!p.pinned_pairs[p.pair(s, c)], -flow[p.pair(s, c)], c));
            let mut kept = 0;
            let mut fresh = 0;
            let mut keep = vec![false; n_c];
            for &c in &mine {
                let pair = p.pair(s, c);
                let new = !p.kappa[pair];
                if p.pinned_pairs[pair] || (kept < b.hard_courses_per_ta && (!new || fresh < b.hard_new_courses)) {
                    keep[c] = true;
                    kept += 1;
                    fresh += new as i64;
                }
            }
            if mine.iter().any(|&c| !keep[c]) {
                for c in 0..n_c {
                    let pair = p.pair(s, c);
                    if allowed[pair] && !keep[c] && !p.pinned_pairs[pair] {
                        allowed[pair] = false;
                    }
                }
                changed = true;
            }
        }
        for c in 0..n_c {
            let mut on: Vec<usize> = (0..n_s).filter(|&s| flow[p.pair(s, c)] > 0).collect();
            if on.len() as i64 > b.hard_tas_per_course {
                on.sort_by_key(|&s| (p.pinned_pairs[p.pair(s, c)], flow[p.pair(s, c)], s));
                for &s in &on[..on.len() - b.hard_tas_per_course as usize] {
                    allowed[p.pair(s, c)] = false;
                }
                changed = true;
            }
        }
        if !changed {
            return flow;
        }
    }
}

/// Hours outside the TA windows plus a heavy charge per course hour left
/// unshipped.
fn plan_violation(p: &Problem, flow: &[i64]) -> i64 {
    let mut shipped = 0;
    let mut outside = 0;
    for (s, ta) in p.tas.iter().enumerate() {
        let total: i64 = (0..p.n_courses).map(|c| flow[p.pair(s, c)]).sum();
        shipped += total;
        outside += (ta.lo - total).max(0) + (total - ta.hi).max(0);
    }
    UNSHIPPED * (p.tasks.iter().map(|t| t.tau).sum::<i64>() - shipped) + outside
}

/// One change of the allowed pair set: the TA takes `add` and gives up
/// `drop`; `evict` is a TA removed from `add` to make room and `cover` a TA
/// that joins `drop` in its place.
#[derive(Clone, Copy)]
struct Swap {
    ta: usize,
    add: Option<usize>,
    drop: Option<usize>,
    evict: Option<usize>,
    cover: Option<usize>,
}

impl Swap {
    fn apply(&self, p: &Problem, allowed: &mut [bool], on: bool) {
        if let Some(c) = self.add {
            allowed[p.pair(self.ta, c)] = on;
        }
        if let Some(r) = self.drop {
            allowed[p.pair(self.ta, r)] = !on;
        }
        if let (Some(c), Some(t)) = (self.add, self.evict) {
            allowed[p.pair(t, c)] = !on;
        }
        if let (Some(r), Some(u)) = (self.drop, self.cover) {
            allowed[p.pair(u, r)] = on;
        }
    }
}

/// Swaps of the course set of a TA outside its window that keep every limit,
/// ranked by a cheap estimate of the hours they move.
fn swaps(p: &Problem, allowed: &[bool], flow: &[i64], totals: &[i64], s: usize) -> Vec<(i64, Swap)> {
    let (n_s, n_c) = (p.n_tas, p.n_courses);
    let b = &p.bounds;
    let ta = &p.tas[s];
    let mine: Vec<usize> = (0..n_c).filter(|&c| allowed[p.pair(s, c)]).collect();
    let fresh = mine.iter().filter(|&&c| !p.kappa[p.pair(s, c)]).count() as i64;
    let holders = |c: usize| (0..n_s).filter(move |&t| allowed[p.pair(t, c)]);
    let spare = |t: usize| (totals[t] - p.tas[t].lo).max(0);
    let room = |t: usize| (p.tas[t].hi - totals[t]).max(0);
    let absorb = |r: usize| holders(r).filter(|&t| t != s).map(room).sum::<i64>();
    let fits = |t: usize, c: usize| {
        let pair = p.pair(t, c);
        let courses = (0..n_c).filter(|&d| allowed[p.pair(t, d)]).count() as i64;
        let fresh = (0..n_c).filter(|&d| allowed[p.pair(t, d)] && !p.kappa[p.pair(t, d)]).count() as i64;
        !allowed[pair]
            && !p.pair_edges[pair].is_empty()
            && courses < b.hard_courses_per_ta
            && (p.kappa[pair] || fresh < b.hard_new_courses)
    };
    // Best TA to take over a dropped course when its holders lack room.
    let cover = |r: usize| {
        let lost = flow[p.pair(s, r)];
        if lost <= absorb(r) || holders(r).count() as i64 > b.hard_tas_per_course {
            return None;
        }
        (0..n_s).filter(|&u| u != s && fits(u, r)).max_by_key(|&u| (room(u).min(lost), p.kappa[p.pair(u, r)], std::cmp::Reverse(u)))
    };
    let drops: Vec<Option<usize>> =
        std::iter::once(None).chain(mine.iter().filter(|&&r| !p.pinned_pairs[p.pair(s, r)]).map(|&r| Some(r))).collect();
    let mut out = Vec::new();
    if totals[s] > ta.hi {
        for &r in drops.iter().flatten() {
            let by = cover(r);
            let moved = flow[p.pair(s, r)].min(absorb(r) + by.map_or(0, room));
            out.push((moved, Swap { ta: s, add: None, drop: Some(r), evict: None, cover: by }));
        }
        return out;
    }
    let deficit = ta.lo - totals[s];
    for c in 0..n_c {
        let pair = p.pair(s, c);
        if allowed[pair] || p.pair_edges[pair].is_empty() {
            continue;
        }
        let new = !p.kappa[pair] as i64;
        let full = holders(c).count() as i64 >= b.hard_tas_per_course;
        let evicts: Vec<Option<usize>> = if full {
            holders(c).filter(|&t| !p.pinned_pairs[p.pair(t, c)]).map(Some).collect()
        } else {
            vec![None]
        };
        for &drop in &drops {
            let (count, fresh_after) = match drop {
                Some(r) => (mine.len() as i64, fresh - !p.kappa[p.pair(s, r)] as i64 + new),
                None => (mine.len() as i64 + 1, fresh + new),
            };
            if count > b.hard_courses_per_ta || fresh_after > b.hard_new_courses {
                continue;
            }
            let lost = drop.map_or(0, |r| flow[p.pair(s, r)]);
            let by = drop.and_then(cover);
            let stuck = drop.map_or(0, |r| (lost - absorb(r) - by.map_or(0, room)).max(0));
            for &evict in &evicts {
                let give: i64 = holders(c)
                    .map(|t| if Some(t) == evict { flow[p.pair(t, c)] } else { flow[p.pair(t, c)].min(spare(t)) })
                    .sum();
                let harm = evict.map_or(0, |t| (p.tas[t].lo - (totals[t] - flow[p.pair(t, c)])).max(0));
                let gain = give.min(deficit + lost) - lost - stuck - harm;
                out.push((gain, Swap { ta: s, add: Some(c), drop, evict, cover: by }));
            }
        }
    }
    out
}

/// Improves the allowed pair set by swaps until the plan fits every window
/// or no candidate helps.
fn refine_plan(p: &Problem, mut flow: Vec<i64>) -> Vec<i64> {
    const TRIED: usize = 6;
    let mut allowed: Vec<bool> = (0..p.n_tas * p.n_courses).map(|pair| flow[pair] > 0 || p.pinned_pairs[pair]).collect();
    let mut score = plan_violation(p, &flow);
    for _ in 0..2 * p.n_tas {
        if score == 0 {
            break;
        }
        let totals: Vec<i64> = (0..p.n_tas).map(|s| (0..p.n_courses).map(|c| flow[p.pair(s, c)]).sum()).collect();
        let mut out: Vec<usize> = (0..p.n_tas).filter(|&s| totals[s] < p.tas[s].lo || totals[s] > p.tas[s].hi).collect();
        out.sort_by_key(|&s| (-(p.tas[s].lo - totals[s]).max(totals[s] - p.tas[s].hi), s));
        let mut best: Option<(i64, Swap, Vec<i64>)> = None;
        for &s in &out {
            let mut cands = swaps(p, &allowed, &flow, &totals, s);
            cands.sort_by_key(|&(gain, sw)| (-gain, sw.add, sw.drop, sw.evict, sw.cover));
            for &(_, sw) in cands.iter().take(TRIED) {
                sw.apply(p, &mut allowed, true);
                let trial = pair_plan(p, &allowed);
                let v = plan_violation(p, &trial);
                sw.apply(p, &mut allowed, false);
                if v < best.as_ref().map_or(score, |b| b.0) {
                    best = Some((v, sw, trial));
                }
            }
            if best.is_some() {
                break;
            }
        }
        let Some((v, sw, trial)) = best else { break };
        sw.apply(p, &mut allowed, true);
        score = v;
        flow = trial;
    }
    flow
}

/// Hands each course's tasks to the TAs the plan puts on the course,
/// largest remaining planned hours first.
fn staff_from_plan(g: &mut Greedy<'_>, flow: &[i64]) {
    let p = g.p;
    let least_of = |t: usize| p.tasks[t].tau.min(p.bounds.min_task_hours).max(1);
    let mut left = flow.to_vec();
    let mut by_course: Vec<Vec<usize>> = vec![Vec::new(); p.n_courses];
    for (t, task) in p.tasks.iter().enumerate() {
        by_course[task.course].push(t);
    }
    for (c, tasks) in by_course.iter_mut().enumerate() {
        tasks.sort_by_key(|&t| (!p.tasks[t].admin, -p.tasks[t].tau, t));
        for &t in tasks.iter() {
            let task = &p.tasks[t];
            let least = least_of(t);
            let mut remaining = task.tau;
            let mut chosen = 0;
            for &e in &task.edges {
                if p.edges[e].fixed == Some(true) {
                    g.take(e, p.edges[e].lo);
                    left[p.pair(p.edges[e].ta, c)] -= p.edges[e].lo;
                    remaining -= p.edges[e].lo;
                    chosen += 1;
                }
            }
            let mut options: Vec<usize> = task
                .edges
                .iter()
                .copied()
                .filter(|&e| p.edges[e].fixed.is_none() && flow[p.pair(p.edges[e].ta, c)] > 0)
                .collect();
            options.sort_by_key(|&e| (-left[p.pair(p.edges[e].ta, c)], e));
            let most = if task.admin { 1 } else { usize::MAX };
            for e in options {
                let pair = p.pair(p.edges[e].ta, c);
                let useful = remaining >= least && left[pair] > 0;
                if chosen >= most || (chosen >= task.need && !useful) {
                    break;
                }
                let later = task.need.saturating_sub(chosen + 1) as i64 * least;
                let give = left[pair].clamp(least, (remaining - later).max(least));
                g.take(e, give);
                left[pair] -= give;
                remaining -= give;
                chosen += 1;
            }
        }
        // Planned TAs left without a task join the largest task with room.
        for s in 0..p.n_tas {
            let pair = p.pair(s, c);
            if flow[pair] == 0 || g.pair_one[pair] > 0 {
                continue;
            }
            let spot = p.pair_edges[pair]
                .iter()
                .copied()
                .filter(|&e| !p.tasks[p.edges[e].task].admin && g.slack(p.edges[e].task) >= p.edges[e].lo)
                .max_by_key(|&e| (p.tasks[p.edges[e].task].tau, std::cmp::Reverse(e)));
            if let Some(e) = spot {
                g.take(e, 0);
            }
        }
    }
}

pub(crate) fn warm_start(p: &Problem, leaf: &LeafSolver<'_>) -> Option<(Vec<bool>, Leaf)> {
    if p.root_conflict {
        return None;
    }
    let mut g = Greedy::new(p);
    let plan = refine_plan(p, limited_plan(p));
    staff_from_plan(&mut g, &plan);
    for pair in 0..p.n_tas * p.n_courses {
        if p.pinned_pairs[pair] && g.pair_one[pair] == 0 {
            let e = p.pair_edges[pair].iter().copied().max_by_key(|&e| (g.slack(p.edges[e].task), e))?;
            g.take(e, 0);
        }
    }
    let planned: Vec<i64> = (0..p.n_tas).map(|s| (0..p.n_courses).map(|c| plan[p.pair(s, c)]).sum()).collect();
    g.fill_staff(&planned);
    for _ in 0..4 * p.n_tas + 8 {
        if consistent(p, &g.y) {
            if let Some(found) = leaf.solve(&g.y) {
                return Some((g.y, found));
            }
        }
        let totals = leaf.relaxed_totals(&g.y)?;
        if !g.repair(&totals) {
            return None;
        }
        g.fill_staff(&totals);
    }
    None
}

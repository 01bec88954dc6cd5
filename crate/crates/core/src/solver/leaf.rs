//! Hour distribution once every assignment boolean is fixed: a bounded
//! transportation problem from tasks to TAs.
//!
//! Convex per-TA costs (magnitude mode) are solved exactly by one min-cost
//! flow. Step costs (indicator mode) are first approached with the convex
//! surrogate, then settled by a search over cost zones of each TA's total.

use crate::instance::PenaltyMode;

use super::flow::Network;
use super::problem::Problem;

const FORCED: i128 = 1 << 100;
const PRIMARY_SCALE: i128 = 1 << 40;

#[derive(Debug, Clone)]
pub(crate) struct Leaf {
    /// Soft cost of the TA totals.
    pub cost: i64,
    /// Sum of squared deviations from target.
    pub squared: i64,
    /// Hours per edge.
    pub hours: Vec<i64>,
    /// False when the zone search ran out of budget.
    pub exact: bool,
}

pub(crate) struct LeafSolver<'a> {
    p: &'a Problem,
    tie_break: bool,
    zone_budget: Option<usize>,
}

struct Shape {
    /// Hours every taught edge gets for free.
    base: Vec<i64>,
    /// Hours each task still needs above the base.
    residual: Vec<i64>,
    ta_base: Vec<i64>,
    ta_room: Vec<i64>,
}

impl<'a> LeafSolver<'a> {
    pub fn new(p: &'a Problem, tie_break: bool, zone_budget: Option<usize>) -> Self {
        LeafSolver { p, tie_break, zone_budget }
    }

    fn shape(&self, y: &[bool]) -> Option<Shape> {
        let p = self.p;
        let base: Vec<i64> = p.edges.iter().enumerate().map(|(e, edge)| if y[e] { edge.lo } else { 0 }).collect();
        let mut residual: Vec<i64> = p.tasks.iter().map(|t| t.tau).collect();
        let mut ta_base = vec![0; p.n_tas];
        let mut ta_room = vec![0; p.n_tas];
        for (e, edge) in p.edges.iter().enumerate() {
            if y[e] {
                residual[edge.task] -= edge.lo;
                ta_base[edge.ta] += edge.lo;
                ta_room[edge.ta] += edge.hi - edge.lo;
            }
        }
        if residual.iter().any(|&r| r < 0) {
            return None;
        }
        Some(Shape { base, residual, ta_base, ta_room })
    }

    /// Distributes hours with each TA total inside `ranges[s]`, minimizing
    /// the sum of `unit(s, h)` over the units a TA receives (`h` is the total
    /// after the unit). Costs must be convex in `h`.
    fn transport(&self, y: &[bool], shape: &Shape, ranges: &[(i64, i64)], unit: impl Fn(usize, i64) -> i128) -> Option<Vec<i64>> {
        let p = self.p;
        let n_t = p.tasks.len();
        let source = 0;
        let sink = 1 + n_t + p.n_tas;
        let mut net = Network::new(sink + 1);
        let mut demand = 0;
        for (t, &r) in shape.residual.iter().enumerate() {
            if r > 0 {
                net.add(source, 1 + t, r, 0);
                demand += r;
            }
        }
        let mut arc_of = vec![usize::MAX; p.edges.len()];
        for (e, edge) in p.edges.iter().enumerate() {
            if y[e] && edge.hi > edge.lo {
                arc_of[e] = net.add(1 + edge.task, 1 + n_t + edge.ta, edge.hi - edge.lo, 0);
            }
        }
        for s in 0..p.n_tas {
            let (lo, hi) = ranges[s];
            let base = shape.ta_base[s];
            let top = hi.min(base + shape.ta_room[s]);
            if base > hi || top < lo {
                return None;
            }
            let step = |h: i64| unit(s, h) - if h <= lo { FORCED } else { 0 };
            let mut h = base + 1;
            while h <= top {
                let cost = step(h);
                let mut end = h;
                while end < top && step(end + 1) == cost {
                    end += 1;
                }
                net.add(1 + n_t + s, sink, end - h + 1, cost);
                h = end + 1;
            }
        }
        let (flow, _) = net.min_cost_max_flow(source, sink);
        if flow != demand {
            return None;
        }
        let mut hours = shape.base.clone();
        for (e, &arc) in arc_of.iter().enumerate() {
            if arc != usize::MAX {
                hours[e] += net.flow(arc);
            }
        }
        let mut totals = vec![0; p.n_tas];
        for (e, edge) in p.edges.iter().enumerate() {
            totals[edge.ta] += hours[e];
        }
        if (0..p.n_tas).any(|s| totals[s] < ranges[s].0 || totals[s] > ranges[s].1) {
            return None;
        }
        Some(hours)
    }

    fn squared_unit(&self, s: usize, h: i64) -> i128 {
        if self.tie_break {
            (2 * (h - self.p.tas[s].target) - 1) as i128
        } else {
            0
        }
    }

    fn totals(&self, hours: &[i64]) -> Vec<i64> {
        let mut totals = vec![0; self.p.n_tas];
        for (e, edge) in self.p.edges.iter().enumerate() {
            totals[edge.ta] += hours[e];
        }
        totals
    }

    fn finish(&self, hours: Vec<i64>, exact: bool) -> Leaf {
        let totals = self.totals(&hours);
        let cost = (0..self.p.n_tas).map(|s| self.p.hour_cost(s, totals[s])).sum();
        let squared = (0..self.p.n_tas).map(|s| (totals[s] - self.p.tas[s].target).pow(2)).sum();
        Leaf { cost, squared, hours, exact }
    }

    pub fn solve(&self, y: &[bool]) -> Option<Leaf> {
        let p = self.p;
        let shape = self.shape(y)?;
        let window: Vec<(i64, i64)> = p.tas.iter().map(|t| (t.lo, t.hi)).collect();
        let surrogate = |s: usize, h: i64| {
            let primary = (p.surrogate_cost(s, h) - p.surrogate_cost(s, h - 1)) as i128;
            primary * PRIMARY_SCALE + self.squared_unit(s, h)
        };
        let hours = self.transport(y, &shape, &window, surrogate)?;
        let first = self.finish(hours, true);
        if p.mode == PenaltyMode::Magnitude {
            return Some(first);
        }

        let zones: Vec<Vec<(i64, i64, i64)>> = (0..p.n_tas)
            .map(|s| {
                let lo = window[s].0.max(shape.ta_base[s]);
                let hi = window[s].1.min(shape.ta_base[s] + shape.ta_room[s]);
                self.zones(s, lo, hi)
            })
            .collect();
        let floor: i64 = zones.iter().map(|z| z.first().map_or(0, |&(c, _, _)| c)).sum();
        if first.cost == floor {
            return Some(first);
        }
        let mut search = ZoneSearch {
            solver: self,
            y,
            shape: &shape,
            zones: &zones,
            ranges: window.clone(),
            best_cost: first.cost,
            best: first.hours.clone(),
            calls: 0,
            budget: self.zone_budget,
            exhausted: true,
        };
        let suffix_floor: Vec<i64> = {
            let mut acc = vec![0; p.n_tas + 1];
            for s in (0..p.n_tas).rev() {
                acc[s] = acc[s + 1] + zones[s].first().map_or(0, |&(c, _, _)| c);
            }
            acc
        };
        search.dive(0, 0, &suffix_floor);
        let exact = search.exhausted;
        let best = search.best;
        Some(self.finish(best, exact))
    }

    /// TA totals of a distribution that may leave the hard windows, paying
    /// per hour outside them. `None` if the tasks cannot be covered at all.
    pub fn relaxed_totals(&self, y: &[bool]) -> Option<Vec<i64>> {
        let p = self.p;
        let shape = self.shape(y)?;
        let open: Vec<(i64, i64)> = vec![(i64::MIN / 4, i64::MAX / 4); p.n_tas];
        let outside = |s: usize, h: i64| {
            let ta = &p.tas[s];
            let step = if h <= ta.lo { -1 } else if h > ta.hi { 1 } else { 0 };
            step * PRIMARY_SCALE + (p.surrogate_cost(s, h) - p.surrogate_cost(s, h - 1)) as i128
        };
        let hours = self.transport(y, &shape, &open, outside)?;
        Some(self.totals(&hours))
    }

    /// `(cost, lo, hi)` intervals of equal step cost covering `[lo, hi]`,
    /// cheapest first.
    fn zones(&self, s: usize, lo: i64, hi: i64) -> Vec<(i64, i64, i64)> {
        if lo > hi {
            return Vec::new();
        }
        let target = self.p.tas[s].target;
        let band = self.p.bounds.soft_dev;
        let cuts = [
            (i64::MIN / 4, target - band - 1),
            (target - band, target - 1),
            (target, target),
            (target + 1, target + band),
            (target + band + 1, i64::MAX / 4),
        ];
        let mut zones: Vec<(i64, i64, i64)> = cuts
            .iter()
            .filter_map(|&(a, b)| {
                let (a, b) = (a.max(lo), b.min(hi));
                (a <= b).then(|| (self.p.hour_cost(s, a), a, b))
            })
            .collect();
        zones.sort_by_key(|&(c, a, _)| (c, (a - target).abs()));
        zones
    }
}

struct ZoneSearch<'s, 'a> {
    solver: &'s LeafSolver<'a>,
    y: &'s [bool],
    shape: &'s Shape,
    zones: &'s [Vec<(i64, i64, i64)>],
    ranges: Vec<(i64, i64)>,
    best_cost: i64,
    best: Vec<i64>,
    calls: usize,
    budget: Option<usize>,
    exhausted: bool,
}

impl ZoneSearch<'_, '_> {
    fn dive(&mut self, s: usize, cost: i64, floor: &[i64]) {
        if cost + floor[s] >= self.best_cost {
            return;
        }
        if s == self.zones.len() {
            return;
        }
        for &(zone_cost, lo, hi) in &self.zones[s] {
            if cost + zone_cost + floor[s + 1] >= self.best_cost {
                break;
            }
            if self.budget.is_some_and(|b| self.calls >= b) {
                self.exhausted = false;
                return;
            }
            let saved = self.ranges[s];
            self.ranges[s] = (lo, hi);
            self.calls += 1;
            let solver = self.solver;
            let squared = |t: usize, h: i64| solver.squared_unit(t, h);
            if let Some(hours) = solver.transport(self.y, self.shape, &self.ranges, squared) {
                if s + 1 == self.zones.len() {
                    self.best_cost = cost + zone_cost;
                    self.best = hours;
                } else {
                    self.dive(s + 1, cost + zone_cost, floor);
                }
            }
            self.ranges[s] = saved;
        }
    }
}

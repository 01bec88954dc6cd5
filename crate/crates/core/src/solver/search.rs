//! Search driver: exhaustive branch and bound, neighbourhood search around
//! the incumbent, progress reporting and stopping rules.

use std::sync::atomic::{AtomicBool, AtomicI64, AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assignment::Assignment;
use crate::model::ModelIR;

use super::greedy;
use super::leaf::LeafSolver;
use super::problem::Problem;
use super::state::State;
use super::{IncumbentRecord, Progress, SolveConfig, SolveHooks, SolveOutcome, SolveStats, Status};

/// Open booleans at the root up to which exhaustive search runs alone.
const SMALL_PROBLEM: usize = 48;
/// Nodes per neighbourhood.
const NEIGHBOURHOOD_NODES: u64 = 4000;
/// Share of the budget spent on neighbourhood search before the final
/// exhaustive pass.
const LNS_SHARE: f64 = 0.8;

pub(crate) struct Monitor<'h> {
    start: Instant,
    deadline: Duration,
    node_limit: Option<u64>,
    cancel: Option<&'h AtomicBool>,
    progress: Option<&'h (dyn Fn(&Progress) + Sync)>,
    log_interval: f64,
    nodes: AtomicU64,
    best: AtomicI64,
    lower_bound: AtomicI64,
    stopped: AtomicBool,
    last_log: Mutex<f64>,
    trace: Mutex<Vec<IncumbentRecord>>,
}

impl<'h> Monitor<'h> {
    fn new(cfg: &SolveConfig, hooks: SolveHooks<'h>) -> Self {
        Monitor {
            start: Instant::now(),
            deadline: cfg.deadline(),
            node_limit: cfg.node_limit,
            cancel: hooks.cancel,
            progress: hooks.progress,
            log_interval: cfg.log_interval,
            nodes: AtomicU64::new(0),
            best: AtomicI64::new(i64::MAX),
            lower_bound: AtomicI64::new(0),
            stopped: AtomicBool::new(false),
            last_log: Mutex::new(0.0),
            trace: Mutex::new(Vec::new()),
        }
    }

    fn elapsed(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }

    fn nodes(&self) -> u64 {
        self.nodes.load(Ordering::Relaxed)
    }

    fn best(&self) -> Option<i64> {
        let b = self.best.load(Ordering::Relaxed);
        (b != i64::MAX).then_some(b)
    }

    fn stopped(&self) -> bool {
        self.stopped.load(Ordering::Relaxed)
    }

    /// Counts one node. False once the search must stop.
    fn tick(&self) -> bool {
        if self.stopped() {
            return false;
        }
        let nodes = self.nodes.fetch_add(1, Ordering::Relaxed) + 1;
        let over_nodes = self.node_limit.is_some_and(|limit| nodes >= limit);
        let cancelled = self.cancel.is_some_and(|c| c.load(Ordering::Relaxed));
        let elapsed = self.start.elapsed();
        if over_nodes || cancelled || elapsed >= self.deadline {
            self.stopped.store(true, Ordering::Relaxed);
            return false;
        }
        if nodes.is_multiple_of(64) {
            self.maybe_log(elapsed.as_secs_f64());
        }
        true
    }

    /// Whether a share of the budget (time and nodes) is used up.
    fn past(&self, share: f64) -> bool {
        self.start.elapsed().as_secs_f64() >= share * self.deadline.as_secs_f64()
            || self.node_limit.is_some_and(|limit| self.nodes() as f64 >= share * limit as f64)
    }

    fn maybe_log(&self, now: f64) {
        let mut last = self.last_log.lock().unwrap();
        if now - *last >= self.log_interval {
            *last = now;
            drop(last);
            self.emit(now);
        }
    }

    fn emit(&self, now: f64) {
        let record = Progress { t: now, incumbent: self.best(), lower_bound: self.lower_bound.load(Ordering::Relaxed), nodes: self.nodes() };
        log::info!("{}", record.line());
        if let Some(f) = self.progress {
            f(&record);
        }
    }

    fn offer(&self, objective: i64) {
        let mut trace = self.trace.lock().unwrap();
        if trace.last().is_none_or(|r| objective < r.objective) {
            trace.push(IncumbentRecord { t: self.elapsed(), objective });
            self.best.fetch_min(objective, Ordering::Relaxed);
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Incumbent {
    pub objective: i64,
    pub squared: i64,
    pub y: Vec<bool>,
    pub hours: Vec<i64>,
}

impl Incumbent {
    fn better_than(&self, other: &Option<Incumbent>, tie_break: bool) -> bool {
        match other {
            None => true,
            Some(o) => self.objective < o.objective || (tie_break && self.objective == o.objective && self.squared < o.squared),
        }
    }
}

enum End {
    Exhausted,
    Stopped,
}

struct Dfs<'p, 'h> {
    p: &'p Problem,
    leaf: &'p LeafSolver<'p>,
    monitor: &'p Monitor<'h>,
    tie_break: bool,
    best: Option<Incumbent>,
    leaves: u64,
    inexact: bool,
}

impl<'p, 'h> Dfs<'p, 'h> {
    fn new(p: &'p Problem, leaf: &'p LeafSolver<'p>, monitor: &'p Monitor<'h>, tie_break: bool, best: Option<Incumbent>) -> Self {
        Dfs { p, leaf, monitor, tie_break, best, leaves: 0, inexact: false }
    }

    fn pruned(&self, bound: i64) -> bool {
        let local = self.best.as_ref().map_or(i64::MAX, |b| b.objective);
        let cutoff = local.min(self.monitor.best.load(Ordering::Relaxed));
        if self.tie_break {
            bound > cutoff
        } else {
            bound >= cutoff
        }
    }

    fn evaluate(&mut self, st: &State<'_>) {
        self.leaves += 1;
        let y = st.values();
        let structure = self.p.structure_cost(&y);
        let Some(found) = self.leaf.solve(&y) else { return };
        if !found.exact {
            self.inexact = true;
        }
        let candidate = Incumbent { objective: structure + found.cost, squared: found.squared, y, hours: found.hours };
        if candidate.better_than(&self.best, self.tie_break) {
            self.monitor.offer(candidate.objective);
            self.best = Some(candidate);
        }
    }

    /// Explores the subtree below the current state of `st`, leaving `st`
    /// as it found it.
    fn run(&mut self, st: &mut State<'_>, node_budget: Option<u64>) -> End {
        let base = st.mark();
        let mut spent = 0u64;
        // (edge, value still to try, mark before the decision)
        let mut stack: Vec<(usize, Option<bool>, usize)> = Vec::new();
        let mut descend = true;
        loop {
            if descend {
                spent += 1;
                if !self.monitor.tick() || node_budget.is_some_and(|b| spent > b) {
                    st.undo_to(base);
                    return End::Stopped;
                }
                if !self.pruned(st.bound()) {
                    match st.branch() {
                        None => self.evaluate(st),
                        Some((e, first)) => {
                            let mark = st.mark();
                            stack.push((e, Some(!first), mark));
                            descend = st.decide(e, first);
                            continue;
                        }
                    }
                }
            }
            // Backtrack to the next untried value.
            descend = false;
            while let Some((e, alt, mark)) = stack.pop() {
                st.undo_to(mark);
                if let Some(v) = alt {
                    stack.push((e, None, mark));
                    if st.decide(e, v) {
                        descend = true;
                        break;
                    }
                    st.undo_to(mark);
                }
            }
            if !descend {
                st.undo_to(base);
                return End::Exhausted;
            }
        }
    }
}

/// Parallel map with a deterministic output order.
fn par_map<T: Send, R: Send>(items: Vec<T>, pool: Option<&Pool>, f: impl Fn(T) -> R + Sync + Send) -> Vec<R> {
    #[cfg(feature = "parallel")]
    if let Some(pool) = pool {
        use rayon::prelude::*;
        return pool.install(|| items.into_par_iter().map(f).collect());
    }
    let _ = pool;
    items.into_iter().map(f).collect()
}

#[cfg(feature = "parallel")]
type Pool = rayon::ThreadPool;
#[cfg(not(feature = "parallel"))]
type Pool = ();

fn make_pool(threads: usize) -> Option<Pool> {
    #[cfg(feature = "parallel")]
    if threads > 1 {
        return rayon::ThreadPoolBuilder::new().num_threads(threads).build().ok();
    }
    let _ = threads;
    None
}

struct Runner<'p, 'h> {
    p: &'p Problem,
    leaf: &'p LeafSolver<'p>,
    monitor: &'p Monitor<'h>,
    cfg: &'p SolveConfig,
    pool: Option<Pool>,
    best: Option<Incumbent>,
    leaves: u64,
    propagations: u64,
    inexact: bool,
}

impl Runner<'_, '_> {
    fn absorb(&mut self, dfs: Dfs<'_, '_>, propagations: u64) {
        self.leaves += dfs.leaves;
        self.inexact |= dfs.inexact;
        self.propagations += propagations;
        if let Some(found) = dfs.best {
            if found.better_than(&self.best, self.cfg.tie_break_squared_deviation) {
                self.best = Some(found);
            }
        }
    }

    /// Exhaustive search from the root. True if the tree was exhausted.
    fn exhaust(&mut self, root: &State<'_>) -> bool {
        let tie = self.cfg.tie_break_squared_deviation;
        if self.pool.is_none() {
            let mut st = root.clone();
            let mut dfs = Dfs::new(self.p, self.leaf, self.monitor, tie, self.best.clone());
            let end = dfs.run(&mut st, None);
            self.absorb(dfs, st.propagations - root.propagations);
            return matches!(end, End::Exhausted);
        }
        let threads = self.cfg.thread_budget;
        let paths = split(root, 4 * threads);
        let (p, leaf, monitor, seed_best) = (self.p, self.leaf, self.monitor, self.best.clone());
        let results = par_map(paths, self.pool.as_ref(), |path| {
            let mut st = root.clone();
            let mut dfs = Dfs::new(p, leaf, monitor, tie, seed_best.clone());
            let end = if st.decide_all(path) { dfs.run(&mut st, None) } else { End::Exhausted };
            let props = st.propagations - root.propagations;
            (dfs, props, matches!(end, End::Exhausted))
        });
        let mut exhausted = true;
        for (dfs, props, done) in results {
            exhausted &= done;
            self.absorb(dfs, props);
        }
        exhausted
    }

    /// Neighbourhood search around the incumbent until `share` of the
    /// budget is used.
    fn improve(&mut self, root: &State<'_>, share: f64) {
        let tie = self.cfg.tie_break_squared_deviation;
        let workers = if self.pool.is_some() { self.cfg.thread_budget } else { 1 };
        let mut round = 0u64;
        while !self.monitor.stopped() && !self.monitor.past(share) {
            let Some(incumbent) = self.best.clone() else { return };
            let seeds: Vec<u64> = (0..workers as u64).map(|i| self.cfg.seed ^ (round * workers as u64 + i).wrapping_mul(0x9E37_79B9_7F4A_7C15)).collect();
            let (p, leaf, monitor) = (self.p, self.leaf, self.monitor);
            let results = par_map(seeds, self.pool.as_ref(), |seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let free = neighbourhood(p, &incumbent, &mut rng);
                let mut st = root.clone();
                let fixes = p.edges.iter().enumerate().filter(|(_, e)| !free[e.ta]).map(|(e, _)| (e, incumbent.y[e]));
                let mut dfs = Dfs::new(p, leaf, monitor, tie, Some(incumbent.clone()));
                if st.decide_all(fixes) {
                    dfs.run(&mut st, Some(NEIGHBOURHOOD_NODES));
                }
                // Completeness inside a neighbourhood proves nothing globally.
                dfs.inexact = false;
                let props = st.propagations - root.propagations;
                (dfs, props)
            });
            for (dfs, props) in results {
                self.absorb(dfs, props);
            }
            round += 1;
        }
    }
}

/// TAs whose booleans are reopened: one seed TA (often a costly one), the
/// TAs sharing its courses, and random others.
fn neighbourhood(p: &Problem, inc: &Incumbent, rng: &mut ChaCha8Rng) -> Vec<bool> {
    let size = rng.random_range(3..=6).min(p.n_tas);
    let mut totals = vec![0; p.n_tas];
    for (e, edge) in p.edges.iter().enumerate() {
        totals[edge.ta] += inc.hours[e];
    }
    let costly: Vec<usize> = (0..p.n_tas).filter(|&s| p.hour_cost(s, totals[s]) > 0).collect();
    let seed = if !costly.is_empty() && rng.random_bool(0.5) { costly[rng.random_range(0..costly.len())] } else { rng.random_range(0..p.n_tas) };
    let mut free = vec![false; p.n_tas];
    free[seed] = true;
    let mut chosen = 1;
    let mut related: Vec<usize> = Vec::new();
    for c in 0..p.n_courses {
        if p.pair_edges[p.pair(seed, c)].iter().any(|&e| inc.y[e]) {
            for &s in &p.course_tas[c] {
                if s != seed && p.pair_edges[p.pair(s, c)].iter().any(|&e| inc.y[e]) && !related.contains(&s) {
                    related.push(s);
                }
            }
        }
    }
    related.shuffle(rng);
    let mut others: Vec<usize> = (0..p.n_tas).collect();
    others.shuffle(rng);
    for s in related.into_iter().chain(others) {
        if chosen >= size {
            break;
        }
        if !free[s] {
            free[s] = true;
            chosen += 1;
        }
    }
    free
}

/// Decision paths covering the tree below `root`, at least `want` of them
/// unless the tree is smaller.
fn split(root: &State<'_>, want: usize) -> Vec<Vec<(usize, bool)>> {
    let mut frontier: std::collections::VecDeque<Vec<(usize, bool)>> = std::collections::VecDeque::from([Vec::new()]);
    let mut done = Vec::new();
    while frontier.len() + done.len() < want {
        let Some(path) = frontier.pop_front() else { break };
        let mut st = root.clone();
        st.decide_all(path.iter().copied());
        match st.branch() {
            None => done.push(path),
            Some((e, first)) => {
                for v in [first, !first] {
                    let mark = st.mark();
                    if st.decide(e, v) {
                        let mut child = path.clone();
                        child.push((e, v));
                        frontier.push_back(child);
                    }
                    st.undo_to(mark);
                }
            }
        }
    }
    let mut all: Vec<_> = done;
    all.extend(frontier);
    all
}

pub(crate) fn run(ir: &ModelIR, cfg: &SolveConfig, hooks: SolveHooks<'_>) -> SolveOutcome {
    let instance = ir.instance();
    let p = Problem::new(instance);
    let monitor = Monitor::new(cfg, hooks);
    let exact_leaves = cfg.optimality_required || p.n_tas <= 8;
    let leaf = LeafSolver::new(&p, cfg.tie_break_squared_deviation, if exact_leaves { None } else { Some(64) });

    let mut root = State::new(&p);
    if !root.root() {
        let stats = SolveStats { propagations: root.propagations, wall_time: monitor.elapsed(), ..Default::default() };
        monitor.emit(monitor.elapsed());
        return SolveOutcome::without_solution(Status::Infeasible, 0, stats);
    }
    let lower_bound = root.bound();
    monitor.lower_bound.store(lower_bound, Ordering::Relaxed);

    let mut runner = Runner {
        p: &p,
        leaf: &leaf,
        monitor: &monitor,
        cfg,
        pool: make_pool(cfg.thread_budget),
        best: None,
        leaves: 0,
        propagations: root.propagations,
        inexact: false,
    };

    let open = root.y.iter().filter(|&&v| v == super::state::UNKNOWN).count();
    let mut warm = None;
    if open > SMALL_PROBLEM {
        let t0 = monitor.elapsed();
        if let Some((y, found)) = greedy::warm_start(&p, &leaf) {
            let objective = p.structure_cost(&y) + found.cost;
            warm = Some((objective, monitor.elapsed() - t0));
            monitor.offer(objective);
            runner.inexact |= !found.exact;
            runner.best = Some(Incumbent { objective, squared: found.squared, y, hours: found.hours });
        }
        if !cfg.optimality_required {
            runner.improve(&root, LNS_SHARE);
        }
    }
    let exhausted = !monitor.stopped() && runner.exhaust(&root);

    let (status, lower_bound) = match (&runner.best, exhausted) {
        (Some(best), true) if !runner.inexact => (Status::Optimal, best.objective),
        (Some(_), _) => (Status::FeasibleTimeout, lower_bound),
        (None, true) => (Status::Infeasible, lower_bound),
        (None, _) => (Status::Unknown, lower_bound),
    };
    monitor.lower_bound.store(lower_bound, Ordering::Relaxed);
    monitor.emit(monitor.elapsed());
    let stats = SolveStats {
        nodes: monitor.nodes(),
        propagations: runner.propagations,
        leaves: runner.leaves,
        wall_time: monitor.elapsed(),
        warm_start_objective: warm.map(|w| w.0),
        warm_start_time: warm.map(|w| w.1),
        incumbents: monitor.trace.lock().unwrap().clone(),
    };
    match runner.best {
        Some(best) => SolveOutcome {
            status,
            best: Some(Assignment::from_hours(instance, p.dense_hours(&best.hours))),
            objective: Some(best.objective),
            lower_bound,
            stats,
        },
        None => SolveOutcome::without_solution(status, lower_bound, stats),
    }
}

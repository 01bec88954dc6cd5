//! Exact and anytime solving.
//!
//! [`solve`] runs a depth-first branch and bound over the teaching booleans
//! (who teaches which task). Every leaf fixes the booleans and hands the
//! hour distribution to an exact transportation subproblem. Instances too
//! large to exhaust are improved by large-neighbourhood search from a greedy
//! [`warm_start`]. [`brute_force`] is an independent oracle working directly
//! on the model rows.

mod brute;
mod flow;
mod greedy;
mod leaf;
mod problem;
mod search;
mod state;

use std::sync::atomic::AtomicBool;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::assignment::Assignment;
use crate::model::ModelIR;

pub use brute::{brute_force, domain_size, BudgetExceeded};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveConfig {
    /// Seconds.
    pub time_limit: f64,
    pub seed: u64,
    pub thread_budget: usize,
    /// Never settle for heuristic hour distributions, and skip neighbourhood
    /// search in favour of exhaustive search.
    pub optimality_required: bool,
    /// Seconds between progress records.
    pub log_interval: f64,
    /// Stop after this many search nodes; makes time-limited runs
    /// reproducible.
    pub node_limit: Option<u64>,
    /// Among equal-penalty schedules prefer the smaller sum of squared
    /// deviations from target.
    pub tie_break_squared_deviation: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            time_limit: 60.0,
            seed: 0,
            thread_budget: 1,
            optimality_required: false,
            log_interval: 1.0,
            node_limit: None,
            tie_break_squared_deviation: false,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
#[error("invalid solve config: {0}")]
pub struct ConfigError(pub String);

impl SolveConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.time_limit > 0.0) {
            return Err(ConfigError("time_limit must be > 0".into()));
        }
        if self.thread_budget == 0 {
            return Err(ConfigError("thread_budget must be >= 1".into()));
        }
        if !(self.log_interval > 0.0) {
            return Err(ConfigError("log_interval must be > 0".into()));
        }
        Ok(())
    }

    pub(crate) fn deadline(&self) -> Duration {
        Duration::from_secs_f64(self.time_limit)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Optimal,
    FeasibleTimeout,
    Infeasible,
    Unknown,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Optimal => "optimal",
            Status::FeasibleTimeout => "feasible_timeout",
            Status::Infeasible => "infeasible",
            Status::Unknown => "unknown",
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One progress record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Progress {
    /// Seconds since the start.
    pub t: f64,
    pub incumbent: Option<i64>,
    pub lower_bound: i64,
    pub nodes: u64,
}

impl Progress {
    /// `t=<sec> inc=<obj> lb=<bound> nodes=<n>`; `inc=-` before the first
    /// incumbent.
    pub fn line(&self) -> String {
        let inc = self.incumbent.map_or_else(|| "-".to_string(), |v| v.to_string());
        format!("t={:.3} inc={} lb={} nodes={}", self.t, inc, self.lower_bound, self.nodes)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncumbentRecord {
    pub t: f64,
    pub objective: i64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub nodes: u64,
    pub propagations: u64,
    pub leaves: u64,
    /// Seconds.
    pub wall_time: f64,
    pub warm_start_objective: Option<i64>,
    /// Seconds.
    pub warm_start_time: Option<f64>,
    /// Successive incumbents, strictly improving.
    pub incumbents: Vec<IncumbentRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub status: Status,
    pub best: Option<Assignment>,
    pub objective: Option<i64>,
    pub lower_bound: i64,
    pub stats: SolveStats,
}

impl SolveOutcome {
    pub(crate) fn without_solution(status: Status, lower_bound: i64, stats: SolveStats) -> Self {
        SolveOutcome { status, best: None, objective: None, lower_bound, stats }
    }

    /// JSON of everything except timing and effort counters; equal for
    /// reproducible runs.
    pub fn canonical_json(&self) -> String {
        let doc = serde_json::json!({
            "status": self.status,
            "objective": self.objective,
            "lower_bound": self.lower_bound,
            "best": self.best,
        });
        serde_json::to_string(&doc).expect("outcome serializes")
    }
}

/// Optional observers of a running solve.
#[derive(Default, Clone, Copy)]
pub struct SolveHooks<'a> {
    pub cancel: Option<&'a AtomicBool>,
    pub progress: Option<&'a (dyn Fn(&Progress) + Sync)>,
}

/// Solves `ir`. See the module documentation for the method.
pub fn solve(ir: &ModelIR, cfg: &SolveConfig) -> SolveOutcome {
    solve_with(ir, cfg, SolveHooks::default())
}

pub fn solve_with(ir: &ModelIR, cfg: &SolveConfig, hooks: SolveHooks<'_>) -> SolveOutcome {
    search::run(ir, cfg, hooks)
}

/// A greedy hard-feasible schedule, if the greedy finds one.
pub fn warm_start(ir: &ModelIR, cfg: &SolveConfig) -> Option<Assignment> {
    let p = problem::Problem::new(ir.instance());
    let leaf = leaf::LeafSolver::new(&p, cfg.tie_break_squared_deviation, Some(64));
    let (_, found) = greedy::warm_start(&p, &leaf)?;
    Some(Assignment::from_hours(ir.instance(), p.dense_hours(&found.hours)))
}

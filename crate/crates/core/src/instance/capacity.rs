use serde::{Deserialize, Serialize};

use super::Instance;

/// Aggregate demand against aggregate supply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapacityReport {
    /// Sum of all task hours.
    pub total_demand: i64,
    /// Sum of all target workloads.
    pub total_target: i64,
    /// `sum(target + hard_dev) - total_demand`.
    pub slack: i64,
    /// Set when the slack is negative: no schedule can cover every task.
    pub warning: bool,
}

/// Checks the necessary condition `sum(tau) <= sum(target + hard_dev)`.
pub fn capacity_report(instance: &Instance) -> CapacityReport {
    let total_demand = instance.total_demand();
    let total_target: i64 = instance.tas().iter().map(|t| t.target_hours).sum();
    let supply = total_target + instance.bounds().hard_dev * instance.n_tas() as i64;
    let slack = supply - total_demand;
    CapacityReport { total_demand, total_target, slack, warning: slack < 0 }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_ta(hours: &[i64]) -> Instance {
        let tasks: Vec<String> = hours
            .iter()
            .enumerate()
            .map(|(i, h)| format!(r#"{{"id": "c{i}", "tasks": [{{"kind": "admin", "total_hours": {h}, "required_tas": 1}}]}}"#))
            .collect();
        let text = format!(
            r#"{{"bounds": {{"hard_dev": 100}},
                "tas": [{{"id": "a", "year": 1, "employment_fraction": 1.0}}],
                "courses": [{}]}}"#,
            tasks.join(",")
        );
        Instance::from_json(&text).unwrap()
    }

    #[test]
    fn slack_examples() {
        let r = capacity_report(&one_ta(&[400]));
        assert_eq!((r.total_demand, r.total_target, r.slack, r.warning), (400, 350, 50, false));
        let r = capacity_report(&one_ta(&[500]));
        assert_eq!((r.slack, r.warning), (-50, true));
        let r = capacity_report(&one_ta(&[]));
        assert_eq!((r.total_demand, r.warning), (0, false));
    }
}

use serde::{Deserialize, Serialize};

use crate::infra::Tier;
use crate::{Error, Result};

/// Resource prices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostSchedule {
    /// Price per MI.
    pub cost_cores: f64,
    /// Price per KB.
    pub cost_stor: f64,
    /// Extra edge price per second of execution.
    pub cost_edge_penalty: f64,
}

impl Default for CostSchedule {
    fn default() -> Self {
        CostSchedule {
            cost_cores: 0.023,
            cost_stor: 0.776,
            cost_edge_penalty: 10.0,
        }
    }
}

impl CostSchedule {
    pub fn validate(&self) -> Result<()> {
        if [self.cost_cores, self.cost_stor, self.cost_edge_penalty]
            .iter()
            .any(|c| !(*c >= 0.0 && c.is_finite()))
        {
            return Err(Error::Config("cost coefficients must be non-negative".into()));
        }
        Ok(())
    }

    /// `cost_cores·MI + cost_stor·data`.
    pub fn resource_rate(&self, mi: f64, data_kb: f64) -> f64 {
        self.cost_cores * mi + self.cost_stor * data_kb
    }
}

/// Monetary cost of running a task for `t_exec` seconds on `tier`: free on
/// the device, `t_exec·cost_r` in the cloud, `t_exec·(cost_r + cost_e)` on
/// the edge.
pub fn utilization_cost(schedule: &CostSchedule, tier: Tier, mi: f64, data_kb: f64, t_exec: f64) -> f64 {
    match tier {
        Tier::Mobile => 0.0,
        Tier::Cloud => t_exec * schedule.resource_rate(mi, data_kb),
        Tier::Edge => t_exec * (schedule.resource_rate(mi, data_kb) + schedule.cost_edge_penalty),
    }
}

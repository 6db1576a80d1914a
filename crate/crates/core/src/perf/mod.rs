//! Analytic latency, energy and cost models.
//!
//! Model functions take seconds, bits and MI at their boundaries;
//! [`LatencyBreakdown`] reports milliseconds. Saturated queues are reported
//! as [`Infeasible`] rather than infinite delays.

mod cost;
mod energy;
mod latency;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cost::{utilization_cost, CostSchedule};
pub use energy::{energy_and_battery, exec_power, task_energy, tx_power, EnergyPlacement, EnergyState};
pub use latency::{
    comm_latency, comm_service, comm_utilization, comm_waiting, exec_service, exec_utilization, exec_waiting,
    response_time, ExecWaitModel, LatencyBreakdown, Placement, RemoteSnapshot, TaskLoad,
};

/// A Poisson stream offering `rate` jobs/s of `size` units each (bits on a
/// channel, MI on a server).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Flow {
    pub rate: f64,
    pub size: f64,
}

impl Flow {
    pub fn new(rate: f64, size: f64) -> Self {
        Flow { rate, size }
    }

    pub fn offered(&self) -> f64 {
        self.rate * self.size
    }
}

/// A queue stage with no steady state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum Infeasible {
    #[error("channel has no available bandwidth")]
    ChannelSaturated,
    #[error("server utilization at or above 1")]
    ServerSaturated,
    #[error("latency is not finite")]
    NonFinite,
}

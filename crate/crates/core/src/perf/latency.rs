use serde::{Deserialize, Serialize};

use super::{Flow, Infeasible};
use crate::infra::Channel;

/// Bandwidth utilization of a channel: `Σ rate·size / bw_total`.
pub fn comm_utilization(channel: &Channel, flows: &[Flow]) -> f64 {
    flows.iter().map(Flow::offered).sum::<f64>() / channel.bw_total as f64
}

/// Queueing delay on a shared channel, seconds:
/// `Σ rate·size / (bw_total − bw_util)`.
pub fn comm_waiting(channel: &Channel, flows: &[Flow]) -> Result<f64, Infeasible> {
    if channel.bw_util >= channel.bw_total {
        return Err(Infeasible::ChannelSaturated);
    }
    let offered: f64 = flows.iter().map(Flow::offered).sum();
    Ok(offered / channel.bw_avail() as f64)
}

/// Shannon-limited transmission time of `bits`, seconds.
pub fn comm_service(channel: &Channel, bits: f64) -> Result<f64, Infeasible> {
    let avail = channel.bw_avail() as f64;
    if avail <= 0.0 {
        return Err(Infeasible::ChannelSaturated);
    }
    if bits == 0.0 {
        return Ok(0.0);
    }
    let rate = avail * (1.0 + channel.p_c / (channel.n0 * avail)).log2();
    if rate <= 0.0 {
        return Err(Infeasible::ChannelSaturated);
    }
    Ok(bits / rate)
}

/// Service plus waiting time, seconds.
pub fn comm_latency(channel: &Channel, bits: f64, flows: &[Flow]) -> Result<f64, Infeasible> {
    Ok(comm_service(channel, bits)? + comm_waiting(channel, flows)?)
}

/// Server utilization: `Σ rate·MI / MIPS`.
pub fn exec_utilization(mips: f64, flows: &[Flow]) -> f64 {
    flows.iter().map(Flow::offered).sum::<f64>() / mips
}

/// How the execution queue converts offered load into waiting time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExecWaitModel {
    /// `Σ rate·(MI/MIPS)² / (1 − U)`: the printed numerator with each term
    /// normalized by MIPS², which is the FCFS queueing delay behind
    /// exponentially sized background work. Seconds.
    #[default]
    Normalized,
    /// `Σ rate·MI / (1 − U)` taken verbatim and read as milliseconds.
    Literal,
}

/// Execution queueing delay on a server of `mips`, seconds.
pub fn exec_waiting(mips: f64, flows: &[Flow], model: ExecWaitModel) -> Result<f64, Infeasible> {
    let u = exec_utilization(mips, flows);
    if !(u < 1.0) {
        return Err(Infeasible::ServerSaturated);
    }
    Ok(match model {
        ExecWaitModel::Normalized => flows.iter().map(|f| f.rate * (f.size / mips).powi(2)).sum::<f64>() / (1.0 - u),
        ExecWaitModel::Literal => flows.iter().map(Flow::offered).sum::<f64>() / (1.0 - u) / 1000.0,
    })
}

/// Execution time `MI / MIPS`, seconds.
pub fn exec_service(mips: f64, mi: f64) -> f64 {
    mi / mips
}

/// Per-stage latencies in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyBreakdown {
    pub t_offload: f64,
    pub t_exec: f64,
    pub t_deliver: f64,
    pub rt: f64,
}

impl LatencyBreakdown {
    pub fn new(t_offload: f64, t_exec: f64, t_deliver: f64) -> Self {
        LatencyBreakdown {
            t_offload,
            t_exec,
            t_deliver,
            rt: t_offload + t_exec + t_deliver,
        }
    }

    pub fn local(t_exec: f64) -> Self {
        Self::new(0.0, t_exec, 0.0)
    }

    /// Communication time `T_o + T_d`, ms.
    pub fn t_comm(&self) -> f64 {
        self.t_offload + self.t_deliver
    }
}

/// Queue state seen by a remote placement.
#[derive(Debug, Clone, Copy)]
pub struct RemoteSnapshot<'a> {
    pub offload: &'a Channel,
    /// Generators sending on the offload channel (bits/s flows).
    pub offload_flows: &'a [Flow],
    pub mips: f64,
    /// Generators sharing the server (MI/s flows).
    pub exec_flows: &'a [Flow],
    pub delivery: &'a Channel,
    /// Servers returning results on the delivery channel (bits/s flows).
    pub delivery_flows: &'a [Flow],
}

/// Where a task runs and the load it meets there.
#[derive(Debug, Clone, Copy)]
pub enum Placement<'a> {
    Local { mips: f64 },
    Remote(RemoteSnapshot<'a>),
}

/// Task quantities consumed by the latency model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskLoad {
    pub mi: f64,
    pub bits_in: f64,
    pub bits_out: f64,
}

/// `RT = T_o + T_e + T_d`; local execution has no communication terms.
pub fn response_time(
    task: TaskLoad,
    placement: &Placement<'_>,
    model: ExecWaitModel,
) -> Result<LatencyBreakdown, Infeasible> {
    match placement {
        Placement::Local { mips } => Ok(LatencyBreakdown::local(exec_service(*mips, task.mi) * 1000.0)),
        Placement::Remote(s) => {
            let t_o = comm_latency(s.offload, task.bits_in, s.offload_flows)?;
            let t_e = exec_service(s.mips, task.mi) + exec_waiting(s.mips, s.exec_flows, model)?;
            let t_d = comm_latency(s.delivery, task.bits_out, s.delivery_flows)?;
            let b = LatencyBreakdown::new(t_o * 1000.0, t_e * 1000.0, t_d * 1000.0);
            if b.rt.is_finite() {
                Ok(b)
            } else {
                Err(Infeasible::NonFinite)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn channel(total: u64, util: u64, p_c: f64, n0: f64) -> Channel {
        let mut ch = Channel::new(total, p_c, n0, 0.0).unwrap();
        ch.bw_util = util;
        ch
    }

    #[test]
    fn utilization_hand_values() {
        let ch = channel(10_000, 0, 1.0, 1.0);
        let one = [Flow::new(10.0, 100.0)];
        assert!((comm_utilization(&ch, &one) - 0.1).abs() < 1e-12);
        assert_eq!(comm_utilization(&ch, &[]), 0.0);
        let two = [Flow::new(10.0, 100.0), Flow::new(10.0, 100.0)];
        assert!((comm_utilization(&ch, &two) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn waiting_hand_values() {
        let ch = channel(2_000, 1_000, 1.0, 1.0);
        assert!((comm_waiting(&ch, &[Flow::new(10.0, 100.0)]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(comm_waiting(&ch, &[]).unwrap(), 0.0);
        let full = channel(2_000, 2_000, 1.0, 1.0);
        assert_eq!(comm_waiting(&full, &[]), Err(Infeasible::ChannelSaturated));
    }

    #[test]
    fn shannon_service_hand_values() {
        // p/(n0·B) = 3 → log2(4) = 2
        let ch = channel(1_000_000, 0, 3e-3, 1e-9);
        assert!((comm_service(&ch, 2e6).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(comm_service(&ch, 0.0).unwrap(), 0.0);
        let ch = channel(1_000_000, 0, 1e-3, 1e-9);
        assert!((comm_service(&ch, 1e6).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exec_hand_values() {
        assert_eq!(exec_utilization(100.0, &[Flow::new(1.0, 50.0)]), 0.5);
        assert_eq!(exec_utilization(100.0, &[]), 0.0);
        assert_eq!(exec_service(100.0, 200.0), 2.0);
        assert_eq!(exec_service(100.0, 0.0), 0.0);
        assert_eq!(
            exec_waiting(100.0, &[Flow::new(2.0, 50.0)], ExecWaitModel::Normalized),
            Err(Infeasible::ServerSaturated)
        );
    }

    #[test]
    fn normalized_wait_matches_mm1() {
        // ρ = 0.5, S = 0.5 s → Wq = ρ/(1−ρ)·S
        let w = exec_waiting(100.0, &[Flow::new(1.0, 50.0)], ExecWaitModel::Normalized).unwrap();
        assert!((w - 0.5).abs() < 1e-12);
        let w = exec_waiting(100.0, &[Flow::new(1.0, 50.0)], ExecWaitModel::Literal).unwrap();
        assert!((w - 0.1).abs() < 1e-12);
        assert_eq!(exec_waiting(100.0, &[], ExecWaitModel::Normalized).unwrap(), 0.0);
    }

    #[test]
    fn local_placement_has_no_comm() {
        let task = TaskLoad {
            mi: 300.0,
            bits_in: 1e5,
            bits_out: 1e5,
        };
        let b = response_time(task, &Placement::Local { mips: 300.0 }, ExecWaitModel::Normalized).unwrap();
        assert_eq!((b.t_offload, b.t_exec, b.t_deliver, b.rt), (0.0, 1000.0, 0.0, 1000.0));
    }
}

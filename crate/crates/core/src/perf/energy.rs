use serde::{Deserialize, Serialize};

use super::LatencyBreakdown;
use crate::infra::Channel;
use crate::{Error, Result};

/// Mobile power model coefficients and the running battery account.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyState {
    /// Initial battery capacity, joules.
    pub bcap: f64,
    /// Energy drawn so far, joules.
    pub consumed: f64,
    pub beta_base: f64,
    pub beta_u: f64,
    /// Per-core static power, watts.
    pub p_cores_coeff: f64,
    /// Idle time, seconds.
    pub t_idle: f64,
    /// Number of idle/active transitions.
    pub c_transitions: f64,
    /// Sum the utilization term over `cores + 1` terms (`i = 0..=cores`)
    /// rather than `cores`.
    pub inclusive_core_sum: bool,
}

impl Default for EnergyState {
    fn default() -> Self {
        EnergyState {
            bcap: 1000.0,
            consumed: 0.0,
            beta_base: 625.25e-3,
            beta_u: 6.9305e-3,
            p_cores_coeff: 0.073e-3,
            t_idle: 1.0,
            c_transitions: 10.0,
            inclusive_core_sum: true,
        }
    }
}

impl EnergyState {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.bcap,
            self.beta_base,
            self.beta_u,
            self.p_cores_coeff,
            self.c_transitions,
        ];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) || !(self.t_idle >= 0.0) || self.consumed < 0.0 {
            return Err(Error::Config("energy coefficients must be positive".into()));
        }
        Ok(())
    }

    /// Remaining capacity as a fraction of `bcap`; may go negative.
    pub fn battery_lifetime(&self) -> f64 {
        (self.bcap - self.consumed) / self.bcap
    }

    pub fn charge(&mut self, joules: f64) {
        self.consumed += joules.max(0.0);
    }
}

/// Multicore execution power, watts:
/// `p_cores·cores + Σ_i β_u·u + β_base·t_idle/C`.
pub fn exec_power(device: &EnergyState, cores: u32, u_per_core: f64) -> f64 {
    let terms = if device.inclusive_core_sum { cores + 1 } else { cores };
    device.p_cores_coeff * f64::from(cores)
        + f64::from(terms) * device.beta_u * u_per_core
        + device.beta_base * device.t_idle / device.c_transitions
}

/// Transmit power needed to reach capacity `Ch`, watts:
/// `n0·bw_avail·(2^(Ch/bw_avail) − 1)`.
pub fn tx_power(channel: &Channel) -> f64 {
    let avail = channel.bw_avail() as f64;
    if channel.ch == 0.0 {
        return 0.0;
    }
    if avail == 0.0 {
        return f64::INFINITY;
    }
    channel.n0 * avail * ((channel.ch / avail).exp2() - 1.0)
}

/// Device activity during one task.
#[derive(Debug, Clone, Copy)]
pub enum EnergyPlacement<'a> {
    /// Executes on the device's `cores` at full utilization.
    Local { cores: u32 },
    /// Transmits on both channels and idles while the server executes.
    Remote {
        cores: u32,
        offload: &'a Channel,
        delivery: &'a Channel,
    },
}

/// Energy of one task, joules: `T_e·p_e + T_c·p_c`.
pub fn task_energy(device: &EnergyState, placement: &EnergyPlacement<'_>, latency: &LatencyBreakdown) -> f64 {
    let secs = |ms: f64| ms / 1000.0;
    match placement {
        EnergyPlacement::Local { cores } => secs(latency.t_exec) * exec_power(device, *cores, 1.0),
        EnergyPlacement::Remote {
            cores,
            offload,
            delivery,
        } => {
            secs(latency.t_exec) * exec_power(device, *cores, 0.0)
                + secs(latency.t_offload) * tx_power(offload)
                + secs(latency.t_deliver) * tx_power(delivery)
        }
    }
}

/// Charges the task energy and returns `(joules, battery fraction)`.
pub fn energy_and_battery(
    device: &mut EnergyState,
    placement: &EnergyPlacement<'_>,
    latency: &LatencyBreakdown,
) -> (f64, f64) {
    let e = task_energy(device, placement, latency);
    device.charge(e);
    (e, device.battery_lifetime())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet() -> EnergyState {
        EnergyState {
            t_idle: 0.0,
            ..EnergyState::default()
        }
    }

    #[test]
    fn baseline_power_only() {
        let d = quiet();
        assert_eq!(exec_power(&d, 2, 0.0), 0.073e-3 * 2.0);
    }

    #[test]
    fn inclusive_sum_has_cores_plus_one_terms() {
        let d = quiet();
        let expected = 0.073e-3 * 2.0 + 3.0 * (6.9305e-3 * 0.5);
        assert!((exec_power(&d, 2, 0.5) - expected).abs() < 1e-15);
        let exclusive = EnergyState {
            inclusive_core_sum: false,
            ..quiet()
        };
        let expected = 0.073e-3 * 2.0 + 2.0 * (6.9305e-3 * 0.5);
        assert!((exec_power(&exclusive, 2, 0.5) - expected).abs() < 1e-15);
    }

    #[test]
    fn transmit_power_hand_values() {
        let mut ch = Channel::new(1_000_000, 0.0, 1e-9, 0.0).unwrap();
        assert_eq!(tx_power(&ch), 0.0);
        ch.ch = 1e6;
        assert!((tx_power(&ch) - 1e-3).abs() < 1e-15);
        ch.ch = 2e6;
        assert!((tx_power(&ch) - 3e-3).abs() < 1e-15);
    }

    #[test]
    fn battery_never_increases() {
        let mut d = EnergyState::default();
        let lat = LatencyBreakdown::local(500.0);
        let mut last = d.battery_lifetime();
        for _ in 0..10 {
            let (_, bl) = energy_and_battery(&mut d, &EnergyPlacement::Local { cores: 2 }, &lat);
            assert!(bl <= last);
            last = bl;
        }
    }
}

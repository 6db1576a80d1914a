use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::NodeClass;
use crate::{Error, Result};

/// Bits per kilobyte of payload.
pub const BITS_PER_KB: f64 = 8192.0;

/// A shared wireless link between the mobile device and one server class.
///
/// Bandwidths are integral so that `bw_avail + bw_util == bw_total` holds
/// exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    /// Total bandwidth, bits/s.
    pub bw_total: u64,
    /// Bandwidth consumed by background traffic, bits/s.
    pub bw_util: u64,
    /// Transmit power of the device on this link, watts.
    pub p_c: f64,
    /// Noise power spectral density, watts/Hz.
    pub n0: f64,
    /// Target channel capacity used by the transmit power model, bits/s.
    pub ch: f64,
}

impl Channel {
    pub fn new(bw_total: u64, p_c: f64, n0: f64, ch: f64) -> Result<Self> {
        let channel = Channel {
            bw_total,
            bw_util: 0,
            p_c,
            n0,
            ch,
        };
        channel.validate()?;
        Ok(channel)
    }

    pub fn validate(&self) -> Result<()> {
        if self.bw_total == 0 {
            return Err(Error::Config("channel bandwidth must be positive".into()));
        }
        if self.bw_util > self.bw_total {
            return Err(Error::Config(format!(
                "channel utilization {} exceeds bandwidth {}",
                self.bw_util, self.bw_total
            )));
        }
        if !(self.n0 > 0.0 && self.n0.is_finite()) {
            return Err(Error::Config(format!("noise density {} must be positive", self.n0)));
        }
        if !(self.p_c >= 0.0 && self.p_c.is_finite() && self.ch >= 0.0 && self.ch.is_finite()) {
            return Err(Error::Config(
                "channel power and capacity must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }

    pub fn bw_avail(&self) -> u64 {
        self.bw_total - self.bw_util
    }

    /// Copy of the channel with `bits_per_s` of background traffic, saturating
    /// at the total bandwidth.
    pub fn with_util(&self, bits_per_s: f64) -> Channel {
        let util = if bits_per_s.is_finite() && bits_per_s > 0.0 {
            (bits_per_s.ceil() as u64).min(self.bw_total)
        } else if bits_per_s.is_infinite() {
            self.bw_total
        } else {
            0
        };
        Channel { bw_util: util, ..*self }
    }
}

/// Link parameters for one server class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassCalibration {
    /// Total link bandwidth, bits/s.
    pub bw_total: u64,
    /// Unloaded round trip of the reference payload, ms.
    pub round_trip_ms: f64,
}

/// Startup computation of per-class channel parameters.
///
/// The transmit power `p_c` is solved so that the reference payload
/// (input plus output, in KB) crosses an unloaded link in `round_trip_ms`:
/// the required rate is `r = bits / t`, and the Shannon relation
/// `r = B·log2(1 + p/(n0·B))` gives `p = n0·B·(2^(r/B) − 1)`. The capacity
/// target `Ch` is set to `r`, so the transmit power model reproduces `p_c`
/// on an idle link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelCalibration {
    pub n0: f64,
    pub reference_payload_kb: f64,
    pub classes: BTreeMap<NodeClass, ClassCalibration>,
}

impl Default for ChannelCalibration {
    fn default() -> Self {
        let edge = ClassCalibration {
            bw_total: 1_000_000_000,
            round_trip_ms: 15.0,
        };
        let cloud = ClassCalibration {
            bw_total: 1_000_000_000,
            round_trip_ms: 90.0,
        };
        ChannelCalibration {
            n0: 2e-8,
            reference_payload_kb: 50.0,
            classes: BTreeMap::from([
                (NodeClass::Ed, edge),
                (NodeClass::Ec, edge),
                (NodeClass::Er, edge),
                (NodeClass::Cd, cloud),
            ]),
        }
    }
}

impl ChannelCalibration {
    pub fn calibrate(&self, class: NodeClass) -> Result<Channel> {
        let cal = self
            .classes
            .get(&class)
            .ok_or_else(|| Error::Config(format!("no channel calibration for class {class}")))?;
        if !(cal.round_trip_ms > 0.0 && cal.round_trip_ms.is_finite()) {
            return Err(Error::Config(format!("round trip for {class} must be positive")));
        }
        if !(self.reference_payload_kb > 0.0) {
            return Err(Error::Config("reference payload must be positive".into()));
        }
        let bw = cal.bw_total as f64;
        let rate = self.reference_payload_kb * BITS_PER_KB / (cal.round_trip_ms / 1000.0);
        let p_c = self.n0 * bw * ((rate / bw).exp2() - 1.0);
        if !p_c.is_finite() {
            return Err(Error::Config(format!(
                "round trip of {} ms for {class} needs an unbounded transmit power",
                cal.round_trip_ms
            )));
        }
        Channel::new(cal.bw_total, p_c, self.n0, rate)
    }
}

//! Simulated edge-cloud topology.
//!
//! Cell sites are read from an OpenCellID-style CSV extract, grouped into
//! cells with k-means, populated with edge servers of the ED/EC/ER classes
//! plus one shared cloud server, and mapped one-to-one onto availability
//! traces on the normalized `[0, 1]` timeline.

mod availability;
mod channel;
mod kmeans;
mod map;
mod sites;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use availability::{synth_availability, AvailabilityTrace, Interval, TraceStore};
pub use channel::{Channel, ChannelCalibration, ClassCalibration, BITS_PER_KB};
pub use kmeans::{cluster_cells, KMeansConfig, SiteCluster};
pub use map::{attach_availability, CellCluster, ChannelEntry, InfraConfig, InfrastructureMap, SynthTraceConfig};
pub use sites::{filter_sites, ingest_cell_sites, read_cell_sites, synth_sites, GeoPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Hardware class of a compute site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum NodeClass {
    /// Edge database server: large storage, fast network access.
    Ed,
    /// Edge compute server: many cores.
    Ec,
    /// Edge regular server.
    Er,
    /// Cloud data center.
    Cd,
    Mobile,
}

impl NodeClass {
    pub const EDGE: [NodeClass; 3] = [NodeClass::Ed, NodeClass::Ec, NodeClass::Er];

    pub fn tier(self) -> Tier {
        match self {
            NodeClass::Ed | NodeClass::Ec | NodeClass::Er => Tier::Edge,
            NodeClass::Cd => Tier::Cloud,
            NodeClass::Mobile => Tier::Mobile,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            NodeClass::Ed => "ED",
            NodeClass::Ec => "EC",
            NodeClass::Er => "ER",
            NodeClass::Cd => "CD",
            NodeClass::Mobile => "MOBILE",
        }
    }
}

impl fmt::Display for NodeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Placement tier used by the constraint tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Edge,
    Cloud,
    Mobile,
}

impl Tier {
    pub fn label(self) -> &'static str {
        match self {
            Tier::Edge => "edge",
            Tier::Cloud => "cloud",
            Tier::Mobile => "mobile",
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Capacities of one compute site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub class: NodeClass,
    pub cores: u32,
    pub clock_mhz: f64,
    pub ram_gb: f64,
    pub storage_gb: f64,
}

impl NodeSpec {
    /// Default hardware catalog.
    pub fn catalog(class: NodeClass) -> NodeSpec {
        let (cores, clock_mhz, ram_gb, storage_gb) = match class {
            NodeClass::Ed => (8, 2100.0, 8.0, 300.0),
            NodeClass::Ec => (16, 2800.0, 16.0, 150.0),
            NodeClass::Er => (4, 1800.0, 8.0, 150.0),
            NodeClass::Cd => (64, 2400.0, 128.0, 1000.0),
            NodeClass::Mobile => (2, 1800.0, 8.0, 16.0),
        };
        NodeSpec {
            class,
            cores,
            clock_mhz,
            ram_gb,
            storage_gb,
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        let positive = self.cores > 0 && self.clock_mhz > 0.0 && self.ram_gb > 0.0 && self.storage_gb > 0.0;
        if positive && self.clock_mhz.is_finite() && self.ram_gb.is_finite() && self.storage_gb.is_finite() {
            Ok(())
        } else {
            Err(crate::Error::Config(format!(
                "node spec for {} must have strictly positive capacities",
                self.class
            )))
        }
    }

    /// Processing capacity in millions of instructions per second, with
    /// `instructions_per_cycle` instructions retired per cycle on every core.
    pub fn mips(&self, instructions_per_cycle: f64) -> f64 {
        f64::from(self.cores) * self.clock_mhz * instructions_per_cycle
    }
}

/// A compute site placed in the topology.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub spec: NodeSpec,
    pub location: GeoPoint,
    pub availability: AvailabilityTrace,
    /// Cell index for edge servers; `None` for the cloud and the mobile device.
    pub cell: Option<usize>,
}

impl Node {
    pub fn class(&self) -> NodeClass {
        self.spec.class
    }

    pub fn tier(&self) -> Tier {
        self.spec.class.tier()
    }

    pub fn is_available(&self, t: f64) -> crate::Result<bool> {
        self.availability.is_available(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_matches_hardware_table() {
        let ed = NodeSpec::catalog(NodeClass::Ed);
        assert_eq!(
            (ed.cores, ed.clock_mhz, ed.ram_gb, ed.storage_gb),
            (8, 2100.0, 8.0, 300.0)
        );
        let ec = NodeSpec::catalog(NodeClass::Ec);
        assert_eq!(
            (ec.cores, ec.clock_mhz, ec.ram_gb, ec.storage_gb),
            (16, 2800.0, 16.0, 150.0)
        );
        let er = NodeSpec::catalog(NodeClass::Er);
        assert_eq!(
            (er.cores, er.clock_mhz, er.ram_gb, er.storage_gb),
            (4, 1800.0, 8.0, 150.0)
        );
        let cd = NodeSpec::catalog(NodeClass::Cd);
        assert_eq!(
            (cd.cores, cd.clock_mhz, cd.ram_gb, cd.storage_gb),
            (64, 2400.0, 128.0, 1000.0)
        );
        let m = NodeSpec::catalog(NodeClass::Mobile);
        assert_eq!((m.cores, m.clock_mhz, m.ram_gb, m.storage_gb), (2, 1800.0, 8.0, 16.0));
    }

    #[test]
    fn mips_is_cores_times_clock() {
        assert_eq!(NodeSpec::catalog(NodeClass::Mobile).mips(1.0), 3600.0);
        assert_eq!(NodeSpec::catalog(NodeClass::Ec).mips(1.0), 44800.0);
    }

    #[test]
    fn zero_capacity_is_rejected() {
        let mut spec = NodeSpec::catalog(NodeClass::Er);
        spec.cores = 0;
        assert!(spec.validate().is_err());
    }
}

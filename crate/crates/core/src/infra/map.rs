use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    cluster_cells, filter_sites, AvailabilityTrace, Channel, ChannelCalibration, GeoPoint, Node, NodeClass, NodeId,
    NodeSpec, Tier, TraceStore,
};
use crate::rng::stream;
use crate::{Error, Result};

/// Topology construction parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InfraConfig {
    /// Number of k-means cells.
    pub clusters: usize,
    /// Total edge servers across all cells.
    pub edge_nodes: usize,
    /// Edge classes placed in every cell.
    pub edge_classes: Vec<NodeClass>,
    /// Minimum servers of each listed edge class per cell.
    pub per_class_min: usize,
    /// Keep a random subset of this many sites before clustering.
    pub site_limit: Option<usize>,
    pub channels: ChannelCalibration,
}

impl Default for InfraConfig {
    fn default() -> Self {
        InfraConfig {
            clusters: 30,
            edge_nodes: 90,
            edge_classes: NodeClass::EDGE.to_vec(),
            per_class_min: 1,
            site_limit: None,
            channels: ChannelCalibration::default(),
        }
    }
}

impl InfraConfig {
    pub fn validate(&self) -> Result<()> {
        if self.clusters == 0 {
            return Err(Error::Config("infrastructure needs at least one cell".into()));
        }
        if self.edge_classes.is_empty() || self.edge_classes.iter().any(|c| c.tier() != Tier::Edge) {
            return Err(Error::Config("edge_classes must list one or more of ED, EC, ER".into()));
        }
        let floor = self.clusters * self.edge_classes.len() * self.per_class_min;
        if self.edge_nodes < floor {
            return Err(Error::Config(format!(
                "{} edge nodes cannot give {} cells {} of each of {} classes",
                self.edge_nodes,
                self.clusters,
                self.per_class_min,
                self.edge_classes.len()
            )));
        }
        Ok(())
    }
}

/// Synthetic trace generator settings, parsed from `synth:ratio=0.65` or
/// `synth:ratio=0.6..0.7,mean=0.05`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthTraceConfig {
    pub ratio_lo: f64,
    pub ratio_hi: f64,
    /// Mean up-period length on the normalized timeline.
    pub mean_interval: f64,
}

impl Default for SynthTraceConfig {
    fn default() -> Self {
        SynthTraceConfig {
            ratio_lo: 0.6,
            ratio_hi: 0.7,
            mean_interval: 0.1,
        }
    }
}

impl SynthTraceConfig {
    pub fn generate(&self, count: usize, seed: u64) -> Result<TraceStore> {
        let mut rng = stream(seed, "traces");
        TraceStore::synthetic(count, self.ratio_lo, self.ratio_hi, self.mean_interval, &mut rng)
    }
}

impl FromStr for SynthTraceConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let body = s
            .strip_prefix("synth:")
            .ok_or_else(|| Error::Parse(format!("`{s}` is not a synth: trace source")))?;
        let mut cfg = SynthTraceConfig::default();
        for part in body.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value in `{part}`")))?;
            let num = |v: &str| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("invalid number `{v}` in `{s}`")))
            };
            match key.trim() {
                "ratio" => {
                    if let Some((lo, hi)) = value.split_once("..") {
                        cfg.ratio_lo = num(lo)?;
                        cfg.ratio_hi = num(hi)?;
                    } else {
                        cfg.ratio_lo = num(value)?;
                        cfg.ratio_hi = cfg.ratio_lo;
                    }
                }
                "mean" => cfg.mean_interval = num(value)?,
                other => return Err(Error::Parse(format!("unknown synth option `{other}`"))),
            }
        }
        Ok(cfg)
    }
}

/// One k-means cell with the servers placed in it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellCluster {
    pub id: usize,
    pub centroid: GeoPoint,
    pub site_count: usize,
    pub members: Vec<NodeId>,
    pub cloud: NodeId,
}

/// Base (unloaded) link from a cell to one server class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelEntry {
    pub cell: usize,
    pub class: NodeClass,
    pub channel: Channel,
}

/// Immutable topology: edge servers grouped by cell, one cloud, one device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfrastructureMap {
    pub seed: u64,
    pub nodes: Vec<Node>,
    pub cells: Vec<CellCluster>,
    pub cloud: NodeId,
    pub mobile: NodeId,
    pub channels: Vec<ChannelEntry>,
}

impl InfrastructureMap {
    /// Clusters `sites`, places servers and maps them onto `traces`.
    pub fn build(config: &InfraConfig, sites: &[GeoPoint], traces: &TraceStore, seed: u64) -> Result<Self> {
        config.validate()?;
        let sites = match config.site_limit {
            Some(limit) => filter_sites(sites, limit, &mut stream(seed, "sites"))?,
            None => sites.to_vec(),
        };
        let clusters = cluster_cells(&sites, config.clusters, seed)?;

        let mut rng = stream(seed, "placement");
        let mut placements: Vec<(usize, NodeClass)> = Vec::with_capacity(config.edge_nodes);
        for cell in 0..clusters.len() {
            for &class in &config.edge_classes {
                for _ in 0..config.per_class_min {
                    placements.push((cell, class));
                }
            }
        }
        while placements.len() < config.edge_nodes {
            let cell = rng.random_range(0..clusters.len());
            let class = config.edge_classes[rng.random_range(0..config.edge_classes.len())];
            placements.push((cell, class));
        }
        placements.sort_by_key(|&(cell, class)| (cell, class));

        let mut nodes = Vec::with_capacity(placements.len() + 2);
        for (idx, (cell, class)) in placements.into_iter().enumerate() {
            let members = &clusters[cell].members;
            let site = sites[members[rng.random_range(0..members.len())]];
            nodes.push(Node {
                id: NodeId(idx as u32),
                spec: NodeSpec::catalog(class),
                location: site,
                availability: AvailabilityTrace::never(),
                cell: Some(cell),
            });
        }

        let n = sites.len() as f64;
        let center = GeoPoint::new(
            sites.iter().map(|s| s.lat).sum::<f64>() / n,
            sites.iter().map(|s| s.lon).sum::<f64>() / n,
        );
        let cloud = NodeId(nodes.len() as u32);
        nodes.push(Node {
            id: cloud,
            spec: NodeSpec::catalog(NodeClass::Cd),
            location: center,
            availability: AvailabilityTrace::always_on(),
            cell: None,
        });
        let mobile = NodeId(nodes.len() as u32);
        nodes.push(Node {
            id: mobile,
            spec: NodeSpec::catalog(NodeClass::Mobile),
            location: clusters[0].centroid,
            availability: AvailabilityTrace::always_on(),
            cell: None,
        });

        let cells = clusters
            .iter()
            .enumerate()
            .map(|(id, c)| CellCluster {
                id,
                centroid: c.centroid,
                site_count: c.members.len(),
                members: nodes.iter().filter(|n| n.cell == Some(id)).map(|n| n.id).collect(),
                cloud,
            })
            .collect::<Vec<_>>();

        let mut channels = Vec::new();
        for cell in 0..cells.len() {
            for class in config.edge_classes.iter().copied().chain([NodeClass::Cd]) {
                if channels
                    .iter()
                    .any(|e: &ChannelEntry| e.cell == cell && e.class == class)
                {
                    continue;
                }
                channels.push(ChannelEntry {
                    cell,
                    class,
                    channel: config.channels.calibrate(class)?,
                });
            }
        }

        let map = InfrastructureMap {
            seed,
            nodes,
            cells,
            cloud,
            mobile,
            channels,
        };
        attach_availability(map, traces, seed)
    }

    /// Same topology with the edge traces permuted by `seed`.
    pub fn reshuffle_availability(&self, seed: u64) -> InfrastructureMap {
        let mut map = self.clone();
        let slots: Vec<usize> = (0..map.nodes.len())
            .filter(|&i| map.nodes[i].tier() == Tier::Edge)
            .collect();
        let mut pool: Vec<AvailabilityTrace> = slots.iter().map(|&i| map.nodes[i].availability.clone()).collect();
        pool.shuffle(&mut stream(seed, "trace-map"));
        for (slot, trace) in slots.into_iter().zip(pool) {
            map.nodes[slot].availability = trace;
        }
        map
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes.get(id.0 as usize).filter(|n| n.id == id)
    }

    pub fn edge_nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| n.tier() == Tier::Edge)
    }

    pub fn cell_nodes(&self, cell: usize) -> impl Iterator<Item = &Node> {
        self.cells
            .get(cell)
            .into_iter()
            .flat_map(|c| c.members.iter())
            .filter_map(|id| self.node(*id))
    }

    pub fn channel(&self, cell: usize, class: NodeClass) -> Option<&Channel> {
        self.channels
            .iter()
            .find(|e| e.cell == cell && e.class == class)
            .map(|e| &e.channel)
    }

    /// Structural checks: unique sequential ids, one cloud, every edge
    /// server in exactly one cell, valid channels.
    pub fn validate(&self) -> Result<()> {
        for (i, node) in self.nodes.iter().enumerate() {
            if node.id.0 as usize != i {
                return Err(Error::Config(format!(
                    "node ids must be sequential, found {} at {i}",
                    node.id
                )));
            }
            node.spec.validate()?;
            if node.tier() == Tier::Edge {
                let holders = self.cells.iter().filter(|c| c.members.contains(&node.id)).count();
                if holders != 1 || node.cell.is_none() {
                    return Err(Error::Config(format!(
                        "edge node {} must belong to exactly one cell",
                        node.id
                    )));
                }
            }
        }
        if self.node(self.cloud).map(Node::class) != Some(NodeClass::Cd) {
            return Err(Error::Config("cloud id does not name a CD node".into()));
        }
        if self.node(self.mobile).map(Node::class) != Some(NodeClass::Mobile) {
            return Err(Error::Config("mobile id does not name a MOBILE node".into()));
        }
        for entry in &self.channels {
            entry.channel.validate()?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let map: InfrastructureMap = serde_json::from_str(text)?;
        map.validate()?;
        Ok(map)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Maps edge servers one-to-one onto traces in a seeded random order. The
/// cloud and the mobile device keep the always-available trace.
pub fn attach_availability(mut map: InfrastructureMap, traces: &TraceStore, seed: u64) -> Result<InfrastructureMap> {
    let edge: Vec<usize> = (0..map.nodes.len())
        .filter(|&i| map.nodes[i].tier() == Tier::Edge)
        .collect();
    if traces.len() < edge.len() {
        return Err(Error::Config(format!(
            "{} availability traces for {} edge nodes",
            traces.len(),
            edge.len()
        )));
    }
    let mut pool: Vec<&AvailabilityTrace> = traces.iter().map(|(_, t)| t).collect();
    pool.shuffle(&mut stream(seed, "trace-map"));
    for (slot, trace) in edge.into_iter().zip(pool) {
        map.nodes[slot].availability = trace.clone();
    }
    for node in map.nodes.iter_mut().filter(|n| n.tier() != Tier::Edge) {
        node.availability = AvailabilityTrace::always_on();
    }
    Ok(map)
}

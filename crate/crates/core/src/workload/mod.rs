//! Typed tasks, the three pipeline applications and workload generators.

mod profile;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::infra::Tier;
use crate::{Error, Result};

pub use profile::{sample_background_load, sample_random_app, AppMix, Generator, WorkloadProfile};

/// Resource profile of a task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TaskKind {
    /// Data intensive.
    Di,
    /// Compute intensive.
    Ci,
    Moderate,
}

/// Inclusive sampling ranges of one task kind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KindRanges {
    pub mi: (f64, f64),
    pub data_in_kb: (f64, f64),
    pub data_out_kb: (f64, f64),
}

impl TaskKind {
    pub fn ranges(self) -> KindRanges {
        match self {
            TaskKind::Di => KindRanges {
                mi: (100.0, 200.0),
                data_in_kb: (15.0, 20.0),
                data_out_kb: (25.0, 30.0),
            },
            TaskKind::Ci => KindRanges {
                mi: (550.0, 650.0),
                data_in_kb: (4.0, 8.0),
                data_out_kb: (4.0, 8.0),
            },
            TaskKind::Moderate => KindRanges {
                mi: (100.0, 200.0),
                data_in_kb: (4.0, 8.0),
                data_out_kb: (4.0, 8.0),
            },
        }
    }
}

fn midpoint((lo, hi): (f64, f64)) -> f64 {
    (lo + hi) / 2.0
}

fn within((lo, hi): (f64, f64), v: f64) -> bool {
    v >= lo && v <= hi
}

/// One task of an application.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub name: String,
    pub kind: TaskKind,
    /// Millions of instructions.
    pub mi: f64,
    pub data_in_kb: f64,
    pub data_out_kb: f64,
    pub ram_gb: f64,
    pub offloadable: bool,
}

impl TaskSpec {
    /// Task with every quantity at the midpoint of its kind's range.
    pub fn nominal(name: &str, kind: TaskKind, ram_gb: f64, offloadable: bool) -> Self {
        let r = kind.ranges();
        TaskSpec {
            name: name.to_string(),
            kind,
            mi: midpoint(r.mi),
            data_in_kb: midpoint(r.data_in_kb),
            data_out_kb: midpoint(r.data_out_kb),
            ram_gb,
            offloadable,
        }
    }

    /// Redraws MI and data sizes uniformly within the kind's ranges.
    pub fn resample<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let r = self.kind.ranges();
        self.mi = rng.random_range(r.mi.0..=r.mi.1);
        self.data_in_kb = rng.random_range(r.data_in_kb.0..=r.data_in_kb.1);
        self.data_out_kb = rng.random_range(r.data_out_kb.0..=r.data_out_kb.1);
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.kind.ranges();
        if !within(r.mi, self.mi) || !within(r.data_in_kb, self.data_in_kb) || !within(r.data_out_kb, self.data_out_kb)
        {
            return Err(Error::Config(format!(
                "task {} has sizes outside the {:?} ranges",
                self.name, self.kind
            )));
        }
        if !(self.ram_gb > 0.0 && self.ram_gb.is_finite()) {
            return Err(Error::Config(format!("task {} needs positive RAM", self.name)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum AppName {
    Intrasafed,
    Mobiar,
    Naviar,
}

impl AppName {
    pub const ALL: [AppName; 3] = [AppName::Intrasafed, AppName::Mobiar, AppName::Naviar];

    pub fn label(self) -> &'static str {
        match self {
            AppName::Intrasafed => "INTRASAFED",
            AppName::Mobiar => "MOBIAR",
            AppName::Naviar => "NAVIAR",
        }
    }
}

impl fmt::Display for AppName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for AppName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AppName::ALL
            .into_iter()
            .find(|a| a.label().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown application `{s}`")))
    }
}

/// Processing and network timing constraints of one tier, ms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TierConstraint {
    pub proc_ms: f64,
    pub net_ms: f64,
}

/// A deadline-bearing task pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppDag {
    pub name: AppName,
    pub tasks: Vec<TaskSpec>,
    /// Dependency pairs `(from, to)` as task indices.
    pub edges: Vec<(usize, usize)>,
    pub deadline_ms: f64,
    pub constraints: BTreeMap<Tier, TierConstraint>,
}

impl AppDag {
    /// Per-task timing constraint on `tier`: processing plus network for
    /// remote tiers, processing only on the device.
    pub fn nabla(&self, tier: Tier) -> Result<f64> {
        let c = self
            .constraints
            .get(&tier)
            .ok_or_else(|| Error::Config(format!("{} has no {tier} constraint", self.name)))?;
        Ok(match tier {
            Tier::Mobile => c.proc_ms,
            Tier::Edge | Tier::Cloud => c.proc_ms + c.net_ms,
        })
    }

    pub fn predecessors(&self, task: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().filter(move |e| e.1 == task).map(|e| e.0)
    }

    /// Draws fresh MI and data sizes for every task.
    pub fn resample<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for task in &mut self.tasks {
            task.resample(rng);
        }
    }

    /// A topological order (Kahn's algorithm, lowest index first).
    pub fn topological_order(&self) -> Result<Vec<usize>> {
        let n = self.tasks.len();
        let mut indegree = vec![0usize; n];
        for &(from, to) in &self.edges {
            if from >= n || to >= n {
                return Err(Error::Config(format!(
                    "{}: edge ({from}, {to}) names a missing task",
                    self.name
                )));
            }
            indegree[to] += 1;
        }
        let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(next) = ready.pop_first() {
            order.push(next);
            for &(from, to) in &self.edges {
                if from == next {
                    indegree[to] -= 1;
                    if indegree[to] == 0 {
                        ready.insert(to);
                    }
                }
            }
        }
        if order.len() != n {
            return Err(Error::Config(format!(
                "{}: dependency edges contain a cycle",
                self.name
            )));
        }
        Ok(order)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tasks.is_empty() {
            return Err(Error::Config(format!("{} has no tasks", self.name)));
        }
        for task in &self.tasks {
            task.validate()?;
        }
        self.topological_order()?;
        if self.predecessors(0).next().is_some() {
            return Err(Error::Config(format!(
                "{}: first task must have no predecessors",
                self.name
            )));
        }
        if !(self.deadline_ms > 0.0) {
            return Err(Error::Config(format!("{}: deadline must be positive", self.name)));
        }
        for tier in [Tier::Edge, Tier::Cloud, Tier::Mobile] {
            if self.nabla(tier)? <= 0.0 {
                return Err(Error::Config(format!(
                    "{}: {tier} constraint must be positive",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

/// Linear chain over `n` tasks in row order.
pub fn chain_edges(n: usize) -> Vec<(usize, usize)> {
    (1..n).map(|i| (i - 1, i)).collect()
}

/// Tier with its processing and network constraint ranges, ms.
type ConstraintRow = (Tier, (f64, f64), (f64, f64));

fn constraints(rows: [ConstraintRow; 3]) -> BTreeMap<Tier, TierConstraint> {
    rows.into_iter()
        .map(|(tier, proc, net)| {
            (
                tier,
                TierConstraint {
                    proc_ms: midpoint(proc),
                    net_ms: midpoint(net),
                },
            )
        })
        .collect()
}

/// Catalog application with nominal task sizes. Ranged constraints resolve
/// to their midpoints.
pub fn build_app(name: AppName) -> AppDag {
    use TaskKind::{Ci, Di, Moderate};
    let (rows, deadline_ms, table): (&[(&str, TaskKind, f64, bool)], f64, _) = match name {
        AppName::Intrasafed => (
            &[
                ("LOAD_MODEL", Moderate, 1.0, false),
                ("UPLOAD", Di, 1.0, true),
                ("ANALYZE", Ci, 4.0, true),
                ("AGGREGATE", Ci, 2.0, true),
                ("SEND_ALERT", Moderate, 1.0, true),
            ],
            108.0,
            constraints([
                (Tier::Edge, (18.0, 18.0), (15.0, 15.0)),
                (Tier::Cloud, (2.0, 20.0), (90.0, 90.0)),
                (Tier::Mobile, (300.0, 300.0), (0.0, 0.0)),
            ]),
        ),
        AppName::Mobiar => (
            &[
                ("UPLOAD", Moderate, 1.0, false),
                ("EXTRACT", Ci, 2.0, true),
                ("PROCESS", Ci, 2.0, true),
                ("DATA", Di, 1.0, true),
                ("DOWNLOAD", Di, 1.0, false),
            ],
            400.0,
            constraints([
                (Tier::Edge, (2.0, 20.0), (15.0, 15.0)),
                (Tier::Cloud, (1.0, 1.0), (300.0, 300.0)),
                (Tier::Mobile, (300.0, 300.0), (0.0, 0.0)),
            ]),
        ),
        AppName::Naviar => (
            &[
                ("MAP", Di, 1.0, true),
                ("GUI", Moderate, 1.0, false),
                ("COORDINATION", Ci, 4.0, true),
                ("SHORTEST_PATH", Ci, 2.0, true),
                ("MOTION_COMMAND", Ci, 1.0, true),
                ("VIRTUAL_GUIDANCE", Moderate, 1.0, false),
                ("RUNTIME_LOCATION", Ci, 1.0, true),
                ("DISPLAY", Moderate, 1.0, false),
            ],
            800.0,
            constraints([
                (Tier::Edge, (250.0, 300.0), (300.0, 400.0)),
                (Tier::Cloud, (2.0, 20.0), (1000.0, 1500.0)),
                (Tier::Mobile, (800.0, 800.0), (0.0, 0.0)),
            ]),
        ),
    };
    let tasks: Vec<TaskSpec> = rows
        .iter()
        .map(|&(n, kind, ram, off)| TaskSpec::nominal(n, kind, ram, off))
        .collect();
    AppDag {
        name,
        edges: chain_edges(tasks.len()),
        tasks,
        deadline_ms,
        constraints: table,
    }
}

/// Catalog app with task sizes drawn from `rng`.
pub fn sample_app<R: Rng + ?Sized>(name: AppName, rng: &mut R) -> AppDag {
    let mut app = build_app(name);
    app.resample(rng);
    app
}

/// Applications keyed by name, overriding the built-in catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppCatalog {
    #[serde(rename = "app")]
    pub apps: Vec<AppDag>,
}

impl Default for AppCatalog {
    fn default() -> Self {
        AppCatalog {
            apps: AppName::ALL.into_iter().map(build_app).collect(),
        }
    }
}

impl AppCatalog {
    pub fn get(&self, name: AppName) -> Result<&AppDag> {
        self.apps
            .iter()
            .find(|a| a.name == name)
            .ok_or_else(|| Error::Config(format!("application {name} missing from catalog")))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let catalog: AppCatalog = toml::from_str(text)?;
        for app in &catalog.apps {
            app.validate()?;
        }
        Ok(catalog)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn instantiate<R: Rng + ?Sized>(&self, name: AppName, rng: &mut R) -> Result<AppDag> {
        let mut app = self.get(name)?.clone();
        app.resample(rng);
        Ok(app)
    }
}

/// Unfinished tasks whose predecessors have all completed.
pub fn ready_tasks(dag: &AppDag, completed: &BTreeSet<usize>) -> BTreeSet<usize> {
    (0..dag.tasks.len())
        .filter(|t| !completed.contains(t))
        .filter(|&t| dag.predecessors(t).all(|p| completed.contains(&p)))
        .collect()
}

//! Emulated reputation contract.
//!
//! Reputation lives in integer fixed point. Updates are submitted as
//! batches that become visible only after the consensus delay, while reads
//! return the latest committed value without waiting. Every call is metered
//! in gas.

mod fixed;
mod gas;

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::infra::NodeId;

pub use fixed::{incentive, FixedRep};
pub use gas::{BatchCost, GasSchedule};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LedgerError {
    #[error("node {0} is already registered")]
    Duplicate(NodeId),
    #[error("node {0} is not registered")]
    UnknownNode(NodeId),
    #[error("fixed-point value {0} outside [0, 1000000]")]
    OutOfRange(u32),
    #[error("ledger domain error: {0}")]
    Domain(String),
    #[error("ledger dump line {line}: {message}")]
    Dump { line: usize, message: String },
}

/// One performance report for a node. A failed attempt carries
/// `measurement = 0` and `failed = true` and earns no incentive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransactionRecord {
    /// Measured response time, ms.
    pub measurement: f64,
    pub node: NodeId,
    pub failed: bool,
}

impl TransactionRecord {
    pub fn success(measurement: f64, node: NodeId) -> Self {
        TransactionRecord {
            measurement,
            node,
            failed: false,
        }
    }

    pub fn failure(node: NodeId) -> Self {
        TransactionRecord {
            measurement: 0.0,
            node,
            failed: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LedgerConfig {
    pub initial_reputation: FixedRep,
    pub omega: FixedRep,
    pub consensus_delay_ms: f64,
    /// Charge gas for reputation reads.
    pub metered_reads: bool,
    pub gas: GasSchedule,
}

impl Default for LedgerConfig {
    fn default() -> Self {
        LedgerConfig {
            initial_reputation: FixedRep::ONE,
            omega: FixedRep::from_raw(300_000).expect("in range"),
            consensus_delay_ms: 4000.0,
            metered_reads: true,
            gas: GasSchedule::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct PendingBatch {
    commit_time: f64,
    /// Resulting value per touched node after the whole batch.
    values: BTreeMap<NodeId, FixedRep>,
}

/// The contract state machine. Calls are applied one at a time in call
/// order.
#[derive(Debug, Clone, PartialEq)]
pub struct Ledger {
    config: LedgerConfig,
    committed: BTreeMap<NodeId, FixedRep>,
    pending: VecDeque<PendingBatch>,
    gas_meter: u64,
}

impl Ledger {
    pub fn new(config: LedgerConfig) -> Self {
        Ledger {
            config,
            committed: BTreeMap::new(),
            pending: VecDeque::new(),
            gas_meter: 0,
        }
    }

    pub fn config(&self) -> &LedgerConfig {
        &self.config
    }

    /// Cumulative gas, Wei.
    pub fn gas_used(&self) -> u64 {
        self.gas_meter
    }

    fn charge(&mut self, wei: u64) {
        self.gas_meter += wei;
    }

    pub fn register_node(&mut self, node: NodeId) -> Result<(), LedgerError> {
        if self.committed.contains_key(&node) {
            return Err(LedgerError::Duplicate(node));
        }
        self.committed.insert(node, self.config.initial_reputation);
        self.charge(self.config.gas.register_node);
        Ok(())
    }

    pub fn unregister_node(&mut self, node: NodeId) -> Result<(), LedgerError> {
        if self.committed.remove(&node).is_none() {
            return Err(LedgerError::UnknownNode(node));
        }
        for batch in &mut self.pending {
            batch.values.remove(&node);
        }
        self.charge(self.config.gas.unregister_node);
        Ok(())
    }

    pub fn get_node_count(&mut self) -> usize {
        self.charge(self.config.gas.get_node_count);
        self.committed.len()
    }

    /// Committed reputation snapshot of `node` at `now`.
    pub fn get_node(&mut self, node: NodeId, now: f64) -> Result<FixedRep, LedgerError> {
        let value = self.visible(node, now)?;
        self.charge(self.config.gas.get_node);
        Ok(value)
    }

    /// Latest value committed at or before `now`; never waits on pending
    /// batches.
    pub fn get_reputation_score(&mut self, node: NodeId, now: f64) -> Result<FixedRep, LedgerError> {
        let value = self.visible(node, now)?;
        if self.config.metered_reads {
            self.charge(self.config.gas.get_reputation_score);
        }
        Ok(value)
    }

    /// Unmetered view used by tests and reports.
    pub fn peek(&self, node: NodeId, now: f64) -> Result<FixedRep, LedgerError> {
        self.visible(node, now)
    }

    fn visible(&self, node: NodeId, now: f64) -> Result<FixedRep, LedgerError> {
        let base = *self.committed.get(&node).ok_or(LedgerError::UnknownNode(node))?;
        Ok(self
            .pending
            .iter()
            .rev()
            .filter(|b| b.commit_time <= now)
            .find_map(|b| b.values.get(&node).copied())
            .unwrap_or(base))
    }

    /// Value after every submitted batch, committed or not.
    fn head(&self, node: NodeId) -> Option<FixedRep> {
        self.pending
            .iter()
            .rev()
            .find_map(|b| b.values.get(&node).copied())
            .or_else(|| self.committed.get(&node).copied())
    }

    /// Applies `new = old·(1 − ω) + ω·inc` for each record in order. The
    /// batch commits at `now + consensus_delay`. An unknown node rejects the
    /// whole batch.
    pub fn update_node_reputation(
        &mut self,
        transactions: &[TransactionRecord],
        nabla_of: impl Fn(NodeId) -> f64,
        now: f64,
    ) -> Result<(), LedgerError> {
        if let Some(t) = transactions.iter().find(|t| !self.committed.contains_key(&t.node)) {
            return Err(LedgerError::UnknownNode(t.node));
        }
        let mut values: BTreeMap<NodeId, FixedRep> = BTreeMap::new();
        for t in transactions {
            let inc = if t.failed {
                FixedRep::ZERO
            } else {
                incentive(t.measurement, nabla_of(t.node))?
            };
            let old = match values.get(&t.node) {
                Some(v) => *v,
                None => self.head(t.node).expect("checked above"),
            };
            values.insert(t.node, old.blend(inc, self.config.omega));
        }
        self.charge(self.config.gas.update_node_reputation.cost(transactions.len()));
        if !values.is_empty() {
            self.pending.push_back(PendingBatch {
                commit_time: now + self.config.consensus_delay_ms,
                values,
            });
        }
        Ok(())
    }

    /// Restores the listed nodes to the initial reputation, subject to the
    /// same consensus delay as updates.
    pub fn reset_reputation(&mut self, nodes: &[NodeId], now: f64) -> Result<(), LedgerError> {
        if let Some(n) = nodes.iter().find(|n| !self.committed.contains_key(n)) {
            return Err(LedgerError::UnknownNode(*n));
        }
        let values = nodes.iter().map(|n| (*n, self.config.initial_reputation)).collect();
        self.charge(self.config.gas.reset_reputation.cost(nodes.len()));
        self.pending.push_back(PendingBatch {
            commit_time: now + self.config.consensus_delay_ms,
            values,
        });
        Ok(())
    }

    /// Folds batches committed at or before `now` into the base state.
    pub fn settle(&mut self, now: f64) {
        while self.pending.front().is_some_and(|b| b.commit_time <= now) {
            let batch = self.pending.pop_front().expect("non-empty");
            for (node, value) in batch.values {
                if let Some(slot) = self.committed.get_mut(&node) {
                    *slot = value;
                }
            }
        }
    }

    pub fn pending_batches(&self) -> usize {
        self.pending.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.committed.keys().copied()
    }

    /// Line-oriented dump:
    ///
    /// ```text
    /// ledger v1
    /// omega <raw>
    /// initial <raw>
    /// delay_ms <ms>
    /// gas <wei>
    /// node <id> <raw>
    /// pending <commit_ms> <id>:<raw> ...
    /// ```
    ///
    /// The gas schedule and read metering are configuration, not state, and
    /// are not included.
    pub fn dump(&self) -> String {
        let mut out = String::from("ledger v1\n");
        let _ = writeln!(out, "omega {}", self.config.omega.raw());
        let _ = writeln!(out, "initial {}", self.config.initial_reputation.raw());
        let _ = writeln!(out, "delay_ms {}", self.config.consensus_delay_ms);
        let _ = writeln!(out, "gas {}", self.gas_meter);
        for (node, rep) in &self.committed {
            let _ = writeln!(out, "node {node} {}", rep.raw());
        }
        for batch in &self.pending {
            let _ = write!(out, "pending {}", batch.commit_time);
            for (node, rep) in &batch.values {
                let _ = write!(out, " {node}:{}", rep.raw());
            }
            out.push('\n');
        }
        out
    }

    /// Inverse of [`Ledger::dump`]; the gas schedule comes from `config`.
    pub fn restore(text: &str, config: LedgerConfig) -> Result<Self, LedgerError> {
        let mut ledger = Ledger::new(config);
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, l)) if l.trim() == "ledger v1" => {}
            _ => {
                return Err(LedgerError::Dump {
                    line: 1,
                    message: "missing `ledger v1` header".into(),
                })
            }
        }
        for (idx, raw) in lines {
            let line = idx + 1;
            let err = |message: String| LedgerError::Dump { line, message };
            let mut parts = raw.split_whitespace();
            let key = parts.next().unwrap_or_default();
            let rest: Vec<&str> = parts.collect();
            let int = |s: &str| s.parse::<u64>().map_err(|_| err(format!("invalid integer `{s}`")));
            let rep = |s: &str| -> Result<FixedRep, LedgerError> {
                let v = int(s)?;
                FixedRep::from_raw(u32::try_from(v).map_err(|_| err(format!("value {v} too large")))?)
            };
            let one = || -> Result<&str, LedgerError> {
                match rest.as_slice() {
                    [v] => Ok(*v),
                    _ => Err(err(format!("`{key}` takes one value"))),
                }
            };
            match key {
                "omega" => ledger.config.omega = rep(one()?)?,
                "initial" => ledger.config.initial_reputation = rep(one()?)?,
                "delay_ms" => {
                    let v = one()?;
                    ledger.config.consensus_delay_ms = v.parse().map_err(|_| err(format!("invalid delay `{v}`")))?;
                }
                "gas" => ledger.gas_meter = int(one()?)?,
                "node" => match rest.as_slice() {
                    [id, value] => {
                        let id = NodeId(int(id)? as u32);
                        if ledger.committed.insert(id, rep(value)?).is_some() {
                            return Err(err(format!("duplicate node {id}")));
                        }
                    }
                    _ => return Err(err("`node` takes an id and a value".into())),
                },
                "pending" => {
                    let (time, entries) = rest.split_first().ok_or_else(|| err("missing commit time".into()))?;
                    let commit_time: f64 = time.parse().map_err(|_| err(format!("invalid time `{time}`")))?;
                    let mut values = BTreeMap::new();
                    for entry in entries {
                        let (id, value) = entry
                            .split_once(':')
                            .ok_or_else(|| err(format!("expected id:value, got `{entry}`")))?;
                        values.insert(NodeId(int(id)? as u32), rep(value)?);
                    }
                    ledger.pending.push_back(PendingBatch { commit_time, values });
                }
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }
        Ok(ledger)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> crate::Result<()> {
        let path = path.as_ref();
        fs::write(path, self.dump()).map_err(|e| crate::Error::io(path, e))
    }
}

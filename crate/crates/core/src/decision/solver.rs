use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Candidate, ConstraintSet};
use crate::infra::{NodeId, Tier};
use crate::ledger::FixedRep;
use crate::{Error, Result};

/// Named clauses of the placement formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Label {
    /// Every queue on the path has a steady state.
    Stable,
    Reputation,
    BatteryLife,
    StorageLimit,
    CpuLimit,
    MemoryLimit,
    TaskReady,
    /// `RT ≤ ∇` for the candidate's tier.
    Timing,
    /// `PR ≤ p_r`.
    Price,
    /// `AP + RT ≤ D`.
    Deadline,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Label::Stable => "stable",
            Label::Reputation => "reputation",
            Label::BatteryLife => "batteryLife",
            Label::StorageLimit => "storageLimit",
            Label::CpuLimit => "cpuLimit",
            Label::MemoryLimit => "memoryLimit",
            Label::TaskReady => "taskReady",
            Label::Timing => "timing",
            Label::Price => "price",
            Label::Deadline => "deadline",
        };
        f.write_str(s)
    }
}

/// Clauses the candidate violates; empty means satisfiable. The device has
/// no ledger identity and no shared capacity, so it is exempt from the
/// reputation and capacity clauses.
pub fn check(candidate: &Candidate, constraints: &ConstraintSet, with_reputation: bool) -> Vec<Label> {
    let mut unsat = Vec::new();
    let Some(p) = candidate.prediction() else {
        return vec![Label::Stable];
    };
    let remote = candidate.tier != Tier::Mobile;
    if with_reputation && remote {
        if let Some(rep) = candidate.reputation {
            if rep < constraints.rep_threshold {
                unsat.push(Label::Reputation);
            }
        }
    }
    if !(constraints.battery_j - p.energy_j >= 0.0) {
        unsat.push(Label::BatteryLife);
    }
    if remote {
        let c = &candidate.capacity;
        let d = &constraints.demand;
        if !(c.used_stor_gb + d.data_gb <= c.stor_gb) {
            unsat.push(Label::StorageLimit);
        }
        if !(c.used_mi + d.mi <= c.cpu_mi) {
            unsat.push(Label::CpuLimit);
        }
        if !(c.used_mem_gb + d.mem_gb <= c.mem_gb) {
            unsat.push(Label::MemoryLimit);
        }
    }
    if !constraints.demand.ready {
        unsat.push(Label::TaskReady);
    }
    if !(p.rt_ms <= constraints.nabla.get(candidate.tier)) {
        unsat.push(Label::Timing);
    }
    if !(p.cost <= constraints.price_cap) {
        unsat.push(Label::Price);
    }
    if !(constraints.app_elapsed_ms + p.rt_ms <= constraints.deadline_ms) {
        unsat.push(Label::Deadline);
    }
    unsat
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SolverVerdict {
    Chosen { node: NodeId, score: f64 },
    Unsat,
}

impl SolverVerdict {
    pub fn node(&self) -> Option<NodeId> {
        match self {
            SolverVerdict::Chosen { node, .. } => Some(*node),
            SolverVerdict::Unsat => None,
        }
    }
}

/// The k-th largest reputation, or the smallest if there are fewer than k.
/// An empty pool imposes no threshold.
pub fn reputation_threshold(reps: &[FixedRep], k: usize) -> Result<FixedRep> {
    if k == 0 {
        return Err(Error::Config("reputation threshold needs k >= 1".into()));
    }
    let mut sorted = reps.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    Ok(sorted
        .get(k - 1)
        .or_else(|| sorted.last())
        .copied()
        .unwrap_or(FixedRep::ZERO))
}

fn select(
    scores: &[Option<f64>],
    candidates: &[Candidate],
    constraints: &ConstraintSet,
    with_reputation: bool,
) -> Result<SolverVerdict> {
    if scores.len() != candidates.len() {
        return Err(Error::Config(format!(
            "{} scores for {} candidates",
            scores.len(),
            candidates.len()
        )));
    }
    constraints.validate()?;
    let mut best: Option<(f64, NodeId)> = None;
    for (cand, score) in candidates.iter().zip(scores) {
        let Some(score) = score.filter(|s| !s.is_nan()) else {
            continue;
        };
        if !check(cand, constraints, with_reputation).is_empty() {
            continue;
        }
        let better = match best {
            None => true,
            Some((s, id)) => score < s || (score == s && cand.node < id),
        };
        if better {
            best = Some((score, cand.node));
        }
    }
    Ok(match best {
        Some((score, node)) => SolverVerdict::Chosen { node, score },
        None => SolverVerdict::Unsat,
    })
}

/// Lowest-score candidate satisfying every clause, ties to the lowest id.
pub fn smt_select(
    scores: &[Option<f64>],
    candidates: &[Candidate],
    constraints: &ConstraintSet,
) -> Result<SolverVerdict> {
    select(scores, candidates, constraints, true)
}

/// [`smt_select`] without the reputation clause.
pub fn minlp_select(
    scores: &[Option<f64>],
    candidates: &[Candidate],
    constraints: &ConstraintSet,
) -> Result<SolverVerdict> {
    select(scores, candidates, constraints, false)
}

/// Among the `k` most reputable stable edge servers (ties to lower id), the
/// one with the shortest predicted queueing delay. Falls back to the device
/// when no edge server qualifies; never picks the cloud.
pub fn sq_select(candidates: &[Candidate], k: usize) -> Option<NodeId> {
    let mut pool: Vec<&Candidate> = candidates
        .iter()
        .filter(|c| c.tier == Tier::Edge && c.prediction().is_some())
        .collect();
    pool.sort_by(|a, b| {
        b.reputation
            .unwrap_or(FixedRep::ZERO)
            .cmp(&a.reputation.unwrap_or(FixedRep::ZERO))
            .then(a.node.cmp(&b.node))
    });
    pool.truncate(k);
    let edge = pool.into_iter().min_by(|a, b| {
        let wa = a.prediction().map_or(f64::INFINITY, |p| p.wait_ms);
        let wb = b.prediction().map_or(f64::INFINITY, |p| p.wait_ms);
        wa.total_cmp(&wb).then(a.node.cmp(&b.node))
    });
    edge.or_else(|| {
        candidates
            .iter()
            .find(|c| c.tier == Tier::Mobile && c.prediction().is_some())
    })
    .map(|c| c.node)
}

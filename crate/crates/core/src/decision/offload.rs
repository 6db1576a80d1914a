use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{
    check, minlp_select, reputation_threshold, score_all, smt_select, sq_select, Candidate, ConstraintSet, ScoreWeights,
};
use crate::infra::{NodeId, Tier};
use crate::ledger::{FixedRep, TransactionRecord};
use crate::Result;

/// Selection rule plugged into the offload loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "engine", rename_all = "UPPERCASE")]
pub enum Policy {
    /// Constraint solving over the top-k reputation pool.
    Fresco { k: usize },
    /// Constraint solving without reputation.
    Minlp,
    /// Shortest queue among the top-k reputation edge servers.
    Sq { k: usize },
}

impl Policy {
    pub fn label(&self) -> &'static str {
        match self {
            Policy::Fresco { .. } => "FRESCO",
            Policy::Minlp => "MINLP",
            Policy::Sq { .. } => "SQ",
        }
    }

    /// Whether the engine reads and writes the reputation ledger.
    pub fn uses_ledger(&self) -> bool {
        !matches!(self, Policy::Minlp)
    }
}

/// Result of one offload attempt.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OffloadOutcome {
    Success {
        rt_ms: f64,
    },
    /// The server failed; `penalty_ms` elapsed before the failure surfaced.
    Failure {
        penalty_ms: f64,
    },
}

/// Performs (simulated) offloads.
pub trait Executor {
    fn offload(&mut self, task: usize, candidate: &Candidate) -> OffloadOutcome;
}

impl<F: FnMut(usize, &Candidate) -> OffloadOutcome> Executor for F {
    fn offload(&mut self, task: usize, candidate: &Candidate) -> OffloadOutcome {
        self(task, candidate)
    }
}

/// Candidates and constraints of one task. The reputation threshold in
/// `constraints` is recomputed by the loop for reputation-aware policies.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskInput {
    pub task: usize,
    pub candidates: Vec<Candidate>,
    pub constraints: ConstraintSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskDecision {
    pub task: usize,
    /// Ledger reports, one per remote attempt, in attempt order.
    pub records: Vec<TransactionRecord>,
    /// Node that ran the task, `None` when the loop gave up.
    pub placed: Option<NodeId>,
    /// Measured response time at the placed node, ms.
    pub rt_ms: f64,
    /// Time lost to failed attempts, ms.
    pub penalty_ms: f64,
    pub failures: usize,
    pub solver_calls: usize,
    /// Candidate count at the first solver call.
    pub considered: usize,
    /// Wall time spent deciding (scoring and solving, not executing), ms.
    pub decision_ms: f64,
}

impl TaskDecision {
    /// The loop ended without a placement: the caller runs the task locally.
    pub fn fell_back(&self) -> bool {
        self.placed.is_none()
    }
}

/// Reputations of the remote candidates that pass every other clause.
fn pool_reps(candidates: &[Candidate], constraints: &ConstraintSet) -> Vec<FixedRep> {
    candidates
        .iter()
        .filter(|c| c.tier != Tier::Mobile && check(c, constraints, false).is_empty())
        .filter_map(|c| c.reputation)
        .collect()
}

/// The retrying selection loop. For each task: score every candidate
/// against the component-wise optima, then repeatedly solve, offload, and on
/// failure record a null report, drop the server and solve again.
pub fn fresco_offload<E: Executor + ?Sized>(
    tasks: Vec<TaskInput>,
    weights: &ScoreWeights,
    policy: Policy,
    executor: &mut E,
) -> Result<Vec<TaskDecision>> {
    weights.validate()?;
    let mut decisions = Vec::with_capacity(tasks.len());
    for input in tasks {
        let TaskInput {
            task,
            mut candidates,
            mut constraints,
        } = input;
        let mut decision = TaskDecision {
            task,
            records: Vec::new(),
            placed: None,
            rt_ms: 0.0,
            penalty_ms: 0.0,
            failures: 0,
            solver_calls: 0,
            considered: candidates.len(),
            decision_ms: 0.0,
        };

        let started = Instant::now();
        let mut scores = score_all(&candidates, weights);
        let mut deciding = started.elapsed();

        loop {
            if candidates.is_empty() {
                break;
            }
            let t0 = Instant::now();
            decision.solver_calls += 1;
            let chosen = match policy {
                Policy::Fresco { k } => {
                    constraints.rep_threshold = reputation_threshold(&pool_reps(&candidates, &constraints), k)?;
                    smt_select(&scores, &candidates, &constraints)?.node()
                }
                Policy::Minlp => minlp_select(&scores, &candidates, &constraints)?.node(),
                Policy::Sq { k } => sq_select(&candidates, k),
            };
            deciding += t0.elapsed();
            let Some(node) = chosen else {
                break;
            };
            let idx = candidates
                .iter()
                .position(|c| c.node == node)
                .expect("selected from the list");
            let remote = candidates[idx].tier != Tier::Mobile;
            match executor.offload(task, &candidates[idx]) {
                OffloadOutcome::Success { rt_ms } => {
                    if remote {
                        decision.records.push(TransactionRecord::success(rt_ms, node));
                    }
                    decision.placed = Some(node);
                    decision.rt_ms = rt_ms;
                    break;
                }
                OffloadOutcome::Failure { penalty_ms } => {
                    if remote {
                        decision.records.push(TransactionRecord::failure(node));
                    }
                    decision.failures += 1;
                    decision.penalty_ms += penalty_ms;
                    candidates.remove(idx);
                    scores.remove(idx);
                }
            }
        }
        decision.decision_ms = deciding.as_secs_f64() * 1000.0;
        decisions.push(decision);
    }
    Ok(decisions)
}

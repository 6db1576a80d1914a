//! Server selection: weighted scoring, the labeled constraint formula, the
//! FRESCO/MINLP/SQ selectors and the retrying offload loop.

mod offload;
mod solver;

use serde::{Deserialize, Serialize};

use crate::infra::{NodeId, Tier};
use crate::ledger::FixedRep;
use crate::perf::Infeasible;
use crate::{Error, Result};

pub use offload::{fresco_offload, Executor, OffloadOutcome, Policy, TaskDecision, TaskInput};
pub use solver::{check, minlp_select, reputation_threshold, smt_select, sq_select, Label, SolverVerdict};

/// Model predictions for one placement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub rt_ms: f64,
    pub energy_j: f64,
    pub cost: f64,
    /// Predicted queueing delay (execution plus channel waits), ms.
    pub wait_ms: f64,
    /// Offload-stage latency, ms.
    pub t_offload_ms: f64,
}

/// Remaining resource budget of a server for the current application and
/// what this task would add to it.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Capacity {
    /// MI per second.
    pub cpu_mi: f64,
    pub mem_gb: f64,
    pub stor_gb: f64,
    /// Already committed by earlier tasks of the application.
    pub used_mi: f64,
    pub used_mem_gb: f64,
    pub used_stor_gb: f64,
}

/// One placement option for a task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub node: NodeId,
    pub tier: Tier,
    pub predicted: std::result::Result<Prediction, Infeasible>,
    /// Ledger reputation; `None` for the device itself.
    pub reputation: Option<FixedRep>,
    pub capacity: Capacity,
    /// Server utilization from background load.
    pub load: f64,
}

impl Candidate {
    pub fn prediction(&self) -> Option<&Prediction> {
        self.predicted.as_ref().ok()
    }
}

/// Demands of the task being placed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskDemand {
    pub mi: f64,
    pub mem_gb: f64,
    pub data_gb: f64,
    /// All predecessors have completed.
    pub ready: bool,
}

/// Per-tier task timing constraint ∇, ms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TierNabla {
    pub edge: f64,
    pub cloud: f64,
    pub mobile: f64,
}

impl TierNabla {
    pub fn get(&self, tier: Tier) -> f64 {
        match tier {
            Tier::Edge => self.edge,
            Tier::Cloud => self.cloud,
            Tier::Mobile => self.mobile,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSet {
    pub nabla: TierNabla,
    pub deadline_ms: f64,
    /// Price cap p_r; infinite when unbounded.
    pub price_cap: f64,
    /// Reputation threshold rp.
    pub rep_threshold: FixedRep,
    /// Time already spent on the application, ms.
    pub app_elapsed_ms: f64,
    /// Battery energy left, joules (BL·bcap).
    pub battery_j: f64,
    pub demand: TaskDemand,
}

impl ConstraintSet {
    pub fn validate(&self) -> Result<()> {
        let nabla = [self.nabla.edge, self.nabla.cloud, self.nabla.mobile];
        if nabla.iter().any(|v| !(*v > 0.0)) || !(self.deadline_ms > 0.0) {
            return Err(Error::Config("constraints need positive ∇ and deadline".into()));
        }
        if self.price_cap.is_nan() || self.price_cap < 0.0 || self.app_elapsed_ms.is_nan() || self.app_elapsed_ms < 0.0
        {
            return Err(Error::Config("price cap and elapsed time must be non-negative".into()));
        }
        Ok(())
    }
}

/// Units the objective gaps are measured in before weighting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreScale {
    /// Seconds, joules and currency as predicted.
    Raw,
    /// Each gap divided by that objective's spread over the candidates, so
    /// every term lies in [0, 1].
    #[default]
    Range,
}

/// Objective weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    #[serde(default)]
    pub scale: ScoreScale,
}

impl Default for ScoreWeights {
    fn default() -> Self {
        ScoreWeights {
            alpha: 0.5,
            beta: 0.4,
            gamma: 0.1,
            scale: ScoreScale::default(),
        }
    }
}

impl ScoreWeights {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        let w = ScoreWeights {
            alpha,
            beta,
            gamma,
            scale: ScoreScale::default(),
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [self.alpha, self.beta, self.gamma];
        if parts.iter().any(|w| !(*w >= 0.0)) || (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "weights ({}, {}, {}) must be non-negative and sum to 1",
                self.alpha, self.beta, self.gamma
            )));
        }
        Ok(())
    }
}

/// Component-wise best response time (ms), energy (J) and price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Optima {
    pub rt_ms: f64,
    pub energy_j: f64,
    pub cost: f64,
}

/// Minima over candidates with a finite prediction; `None` if there are none.
pub fn local_optima(candidates: &[Candidate]) -> Option<Optima> {
    candidates
        .iter()
        .filter_map(Candidate::prediction)
        .fold(None, |acc, p| {
            Some(match acc {
                None => Optima {
                    rt_ms: p.rt_ms,
                    energy_j: p.energy_j,
                    cost: p.cost,
                },
                Some(o) => Optima {
                    rt_ms: o.rt_ms.min(p.rt_ms),
                    energy_j: o.energy_j.min(p.energy_j),
                    cost: o.cost.min(p.cost),
                },
            })
        })
}

/// Maxima over candidates with a finite prediction.
fn local_maxima(candidates: &[Candidate]) -> Option<Optima> {
    candidates
        .iter()
        .filter_map(Candidate::prediction)
        .fold(None, |acc, p| {
            Some(match acc {
                None => Optima {
                    rt_ms: p.rt_ms,
                    energy_j: p.energy_j,
                    cost: p.cost,
                },
                Some(o) => Optima {
                    rt_ms: o.rt_ms.max(p.rt_ms),
                    energy_j: o.energy_j.max(p.energy_j),
                    cost: o.cost.max(p.cost),
                },
            })
        })
}

/// `α·(RT − optRT) + β·(EC − optEC) + γ·(PR − optPR)` with times in seconds.
pub fn score(prediction: &Prediction, optima: &Optima, weights: &ScoreWeights) -> f64 {
    weights.alpha * (prediction.rt_ms - optima.rt_ms) / 1000.0
        + weights.beta * (prediction.energy_j - optima.energy_j)
        + weights.gamma * (prediction.cost - optima.cost)
}

/// Weighted gaps, each divided by its spread; a zero spread contributes 0.
pub fn range_score(prediction: &Prediction, optima: &Optima, maxima: &Optima, weights: &ScoreWeights) -> f64 {
    let gap = |v: f64, lo: f64, hi: f64| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 };
    weights.alpha * gap(prediction.rt_ms, optima.rt_ms, maxima.rt_ms)
        + weights.beta * gap(prediction.energy_j, optima.energy_j, maxima.energy_j)
        + weights.gamma * gap(prediction.cost, optima.cost, maxima.cost)
}

/// Scores aligned with `candidates`; infeasible candidates score `None`.
pub fn score_all(candidates: &[Candidate], weights: &ScoreWeights) -> Vec<Option<f64>> {
    let (Some(opt), Some(max)) = (local_optima(candidates), local_maxima(candidates)) else {
        return vec![None; candidates.len()];
    };
    candidates
        .iter()
        .map(|c| {
            c.prediction().map(|p| match weights.scale {
                ScoreScale::Raw => score(p, &opt, weights),
                ScoreScale::Range => range_score(p, &opt, &max, weights),
            })
        })
        .collect()
}

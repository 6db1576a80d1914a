//! Random decision instances and reference selectors written directly from
//! the clause list, independent of the library's solver.

#![allow(dead_code)]

use fresco_core::decision::{
    score_all, Candidate, Capacity, ConstraintSet, Prediction, ScoreWeights, TaskDemand, TierNabla,
};
use fresco_core::infra::{NodeId, Tier};
use fresco_core::ledger::FixedRep;
use fresco_core::perf::Infeasible;
use rand::Rng;

pub struct Instance {
    pub candidates: Vec<Candidate>,
    pub constraints: ConstraintSet,
    pub scores: Vec<Option<f64>>,
    pub k: usize,
}

/// Values drawn from a small grid so that score and reputation ties occur.
fn grid<R: Rng>(rng: &mut R, lo: f64, step: f64, n: u32) -> f64 {
    lo + step * f64::from(rng.random_range(0..n))
}

pub fn random_candidate<R: Rng>(rng: &mut R, id: u32, tier: Tier) -> Candidate {
    let predicted = if rng.random_bool(0.1) {
        Err(Infeasible::ServerSaturated)
    } else {
        Ok(Prediction {
            rt_ms: grid(rng, 5.0, 5.0, 12),
            energy_j: grid(rng, 0.0, 0.5, 4),
            cost: grid(rng, 0.0, 0.25, 4),
            wait_ms: grid(rng, 0.0, 1.0, 6),
            t_offload_ms: 1.0,
        })
    };
    Candidate {
        node: NodeId(id),
        tier,
        predicted,
        reputation: (tier != Tier::Mobile).then(|| FixedRep::from_raw(rng.random_range(0..=10u32) * 100_000).unwrap()),
        capacity: Capacity {
            cpu_mi: grid(rng, 50.0, 50.0, 4),
            mem_gb: grid(rng, 1.0, 1.0, 8),
            stor_gb: grid(rng, 1.0, 1.0, 8),
            used_mi: grid(rng, 0.0, 25.0, 4),
            used_mem_gb: grid(rng, 0.0, 1.0, 3),
            used_stor_gb: grid(rng, 0.0, 1.0, 3),
        },
        load: rng.random_range(0.0..1.0),
    }
}

/// `n` candidates: a device (sometimes), a cloud (sometimes) and edge
/// servers, with ids shuffled so that position never implies id order.
pub fn random_instance<R: Rng>(rng: &mut R, n: usize) -> Instance {
    let mut ids: Vec<u32> = (0..n as u32).collect();
    for i in (1..ids.len()).rev() {
        ids.swap(i, rng.random_range(0..=i));
    }
    let candidates: Vec<Candidate> = ids
        .iter()
        .enumerate()
        .map(|(pos, &id)| {
            let tier = match pos {
                0 if rng.random_bool(0.8) => Tier::Mobile,
                1 if rng.random_bool(0.8) => Tier::Cloud,
                _ => Tier::Edge,
            };
            random_candidate(rng, id, tier)
        })
        .collect();
    let weights = ScoreWeights::new(0.5, 0.3, 0.2).unwrap();
    let scores = score_all(&candidates, &weights);
    let constraints = ConstraintSet {
        nabla: TierNabla {
            edge: grid(rng, 20.0, 10.0, 5),
            cloud: grid(rng, 30.0, 10.0, 5),
            mobile: grid(rng, 30.0, 10.0, 5),
        },
        deadline_ms: grid(rng, 40.0, 20.0, 5),
        price_cap: if rng.random_bool(0.3) {
            f64::INFINITY
        } else {
            grid(rng, 0.25, 0.25, 4)
        },
        rep_threshold: FixedRep::from_raw(rng.random_range(0..=10u32) * 100_000).unwrap(),
        app_elapsed_ms: grid(rng, 0.0, 10.0, 4),
        battery_j: grid(rng, 0.5, 0.5, 6),
        demand: TaskDemand {
            mi: grid(rng, 10.0, 10.0, 5),
            mem_gb: grid(rng, 0.5, 0.5, 4),
            data_gb: grid(rng, 0.5, 0.5, 4),
            ready: rng.random_bool(0.95),
        },
    };
    Instance {
        candidates,
        constraints,
        scores,
        k: rng.random_range(1..=4),
    }
}

/// Whether every clause holds for `c`: a stable prediction; the reputation
/// threshold (remote, when requested); battery; storage, cpu and memory
/// (remote only); readiness; the tier timing bound; the price cap; the
/// application deadline.
pub fn satisfies(c: &Candidate, s: &ConstraintSet, with_reputation: bool) -> bool {
    let Ok(p) = &c.predicted else { return false };
    let remote = matches!(c.tier, Tier::Edge | Tier::Cloud);
    let nabla = match c.tier {
        Tier::Edge => s.nabla.edge,
        Tier::Cloud => s.nabla.cloud,
        Tier::Mobile => s.nabla.mobile,
    };
    let rep_ok = !(with_reputation && remote) || c.reputation.is_none_or(|r| r >= s.rep_threshold);
    let cap = &c.capacity;
    let capacity_ok = !remote
        || (cap.used_stor_gb + s.demand.data_gb <= cap.stor_gb
            && cap.used_mi + s.demand.mi <= cap.cpu_mi
            && cap.used_mem_gb + s.demand.mem_gb <= cap.mem_gb);
    rep_ok
        && capacity_ok
        && s.battery_j >= p.energy_j
        && s.demand.ready
        && p.rt_ms <= nabla
        && p.cost <= s.price_cap
        && s.app_elapsed_ms + p.rt_ms <= s.deadline_ms
}

/// Exhaustive reference: every satisfying candidate ranked by
/// `(score, node id)`; the first one wins.
pub fn oracle_select(inst: &Instance, with_reputation: bool) -> Option<NodeId> {
    let mut feasible: Vec<(f64, NodeId)> = inst
        .candidates
        .iter()
        .zip(&inst.scores)
        .filter_map(|(c, s)| {
            s.map(|s| (s, c))
                .filter(|(_, c)| satisfies(c, &inst.constraints, with_reputation))
        })
        .map(|(s, c)| (s, c.node))
        .collect();
    feasible.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    feasible.first().map(|&(_, n)| n)
}

/// Reference shortest-queue rule: rank stable edge servers by reputation
/// (descending, then id), keep `k`, take the smallest wait (then id);
/// otherwise the device if it is stable.
pub fn oracle_sq(inst: &Instance) -> Option<NodeId> {
    let mut edges: Vec<(u32, u32, f64)> = inst
        .candidates
        .iter()
        .filter(|c| c.tier == Tier::Edge)
        .filter_map(|c| {
            let p = c.predicted.as_ref().ok()?;
            Some((c.reputation.map_or(0, FixedRep::raw), c.node.0, p.wait_ms))
        })
        .collect();
    edges.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    edges.truncate(inst.k);
    edges.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.1.cmp(&b.1)));
    edges.first().map(|e| NodeId(e.1)).or_else(|| {
        inst.candidates
            .iter()
            .find(|c| c.tier == Tier::Mobile && c.predicted.is_ok())
            .map(|c| c.node)
    })
}

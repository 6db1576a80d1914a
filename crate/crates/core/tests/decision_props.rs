mod common;

use fresco_core::decision::{
    fresco_offload, minlp_select, score_all, smt_select, sq_select, Candidate, OffloadOutcome, Policy, ScoreWeights,
    TaskInput,
};
use fresco_core::infra::Tier;
use fresco_core::rng::stream;
use proptest::prelude::*;

use common::{oracle_select, oracle_sq, random_instance, satisfies};

proptest! {
    #[test]
    fn selectors_match_the_reference(seed in any::<u64>(), n in 0usize..=12) {
        let inst = random_instance(&mut stream(seed, "instance"), n);
        let smt = smt_select(&inst.scores, &inst.candidates, &inst.constraints).unwrap().node();
        let minlp = minlp_select(&inst.scores, &inst.candidates, &inst.constraints).unwrap().node();
        prop_assert_eq!(smt, oracle_select(&inst, true));
        prop_assert_eq!(minlp, oracle_select(&inst, false));
        prop_assert_eq!(sq_select(&inst.candidates, inst.k), oracle_sq(&inst));
    }

    #[test]
    fn saturated_candidates_are_never_chosen(seed in any::<u64>(), n in 1usize..=40) {
        let inst = random_instance(&mut stream(seed, "saturated"), n);
        let chosen = [
            smt_select(&inst.scores, &inst.candidates, &inst.constraints).unwrap().node(),
            minlp_select(&inst.scores, &inst.candidates, &inst.constraints).unwrap().node(),
            sq_select(&inst.candidates, inst.k),
        ];
        for node in chosen.into_iter().flatten() {
            let c = inst.candidates.iter().find(|c| c.node == node).unwrap();
            prop_assert!(c.predicted.is_ok());
        }
    }

    #[test]
    fn dropping_the_reputation_clause_never_hurts(seed in any::<u64>(), n in 0usize..=20) {
        let inst = random_instance(&mut stream(seed, "relax"), n);
        let smt = smt_select(&inst.scores, &inst.candidates, &inst.constraints).unwrap();
        let minlp = minlp_select(&inst.scores, &inst.candidates, &inst.constraints).unwrap();
        if let fresco_core::decision::SolverVerdict::Chosen { score, .. } = smt {
            match minlp {
                fresco_core::decision::SolverVerdict::Chosen { score: relaxed, .. } => prop_assert!(relaxed <= score),
                fresco_core::decision::SolverVerdict::Unsat => prop_assert!(false, "relaxed problem unsat"),
            }
        }
    }

    #[test]
    fn scores_are_non_negative_gaps(seed in any::<u64>(), n in 1usize..=30, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (alpha, beta) = (a, b * (1.0 - a));
        let weights = ScoreWeights::new(alpha, beta, 1.0 - alpha - beta).unwrap();
        let inst = random_instance(&mut stream(seed, "scores"), n);
        for (c, s) in inst.candidates.iter().zip(score_all(&inst.candidates, &weights)) {
            prop_assert_eq!(s.is_some(), c.predicted.is_ok());
            if let Some(s) = s {
                prop_assert!((-1e-12..=1.0 + 1e-12).contains(&s));
            }
        }
    }

    #[test]
    fn retry_loop_places_on_a_satisfying_node(seed in any::<u64>(), n in 1usize..=20, fail_mask in any::<u64>()) {
        let inst = random_instance(&mut stream(seed, "retry"), n);
        let constraints = inst.constraints;
        let input = TaskInput { task: 0, candidates: inst.candidates.clone(), constraints };
        let mut exec = |_: usize, c: &Candidate| {
            if fail_mask >> (c.node.0 % 64) & 1 == 1 {
                OffloadOutcome::Failure { penalty_ms: 1.0 }
            } else {
                OffloadOutcome::Success { rt_ms: c.prediction().unwrap().rt_ms }
            }
        };
        let out = fresco_offload(vec![input], &ScoreWeights::default(), Policy::Minlp, &mut exec).unwrap();
        let d = &out[0];
        prop_assert!(d.solver_calls <= n + 1);
        let device_failures = d.failures - d.records.iter().filter(|r| r.failed).count();
        prop_assert!(device_failures <= 1);
        if let Some(node) = d.placed {
            let c = inst.candidates.iter().find(|c| c.node == node).unwrap();
            prop_assert!(satisfies(c, &constraints, false));
            prop_assert!(fail_mask >> (node.0 % 64) & 1 == 0);
        }
        let remote = |node| inst.candidates.iter().any(|c| c.node == node && c.tier != Tier::Mobile);
        prop_assert!(d.records.iter().all(|r| remote(r.node)));
    }
}

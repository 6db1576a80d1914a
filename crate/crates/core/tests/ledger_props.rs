use fresco_core::infra::NodeId;
use fresco_core::ledger::{incentive, FixedRep, Ledger, LedgerConfig, TransactionRecord};
use proptest::prelude::*;

fn rep() -> impl Strategy<Value = FixedRep> {
    (0..=FixedRep::SCALE).prop_map(|r| FixedRep::from_raw(r).unwrap())
}

fn ledger_with(nodes: u32) -> Ledger {
    let mut ledger = Ledger::new(LedgerConfig::default());
    for n in 0..nodes {
        ledger.register_node(NodeId(n)).unwrap();
    }
    ledger
}

proptest! {
    #[test]
    fn incentive_is_clamped(rt in 0.0f64..5000.0, nabla in 1e-4f64..5000.0) {
        let inc = incentive(rt, nabla).unwrap();
        prop_assert!(inc <= FixedRep::ONE);
        if rt >= nabla {
            prop_assert_eq!(inc, FixedRep::ZERO);
        } else {
            prop_assert!((inc.to_f64() - (nabla - rt) / nabla).abs() <= 2e-6 + 1e-3 / nabla);
        }
    }

    #[test]
    fn incentive_falls_with_response_time(a in 0.0f64..500.0, b in 0.0f64..500.0, nabla in 1.0f64..500.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(incentive(lo, nabla).unwrap() >= incentive(hi, nabla).unwrap());
    }

    #[test]
    fn blend_stays_between_its_inputs(old in rep(), inc in rep(), omega in rep()) {
        let new = old.blend(inc, omega);
        prop_assert!(new >= old.min(inc) && new <= old.max(inc));
    }

    #[test]
    fn reads_see_the_last_commit_before_now(
        delays in prop::collection::vec(0.0f64..10_000.0, 1..8),
        probe in 0.0f64..60_000.0,
    ) {
        let mut ledger = ledger_with(1);
        let node = NodeId(0);
        let mut submitted = Vec::new();
        let mut t = 0.0;
        for d in &delays {
            t += d;
            ledger.update_node_reputation(&[TransactionRecord::failure(node)], |_| 15.0, t).unwrap();
            submitted.push((t + 4000.0, ledger.peek(node, f64::INFINITY).unwrap()));
        }
        let expected = submitted
            .iter()
            .rev()
            .find(|(commit, _)| *commit <= probe)
            .map_or(FixedRep::ONE, |(_, v)| *v);
        prop_assert_eq!(ledger.peek(node, probe).unwrap(), expected);
        ledger.settle(probe);
        prop_assert_eq!(ledger.peek(node, probe).unwrap(), expected);
    }

    #[test]
    fn dump_round_trips(ops in prop::collection::vec((0u32..5, any::<bool>(), 0.0f64..40.0), 0..30)) {
        let mut ledger = ledger_with(5);
        for (i, (n, ok, rt)) in ops.iter().enumerate() {
            let record = if *ok { TransactionRecord::success(*rt, NodeId(*n)) } else { TransactionRecord::failure(NodeId(*n)) };
            ledger.update_node_reputation(&[record], |_| 20.0, i as f64 * 1000.0).unwrap();
        }
        let text = ledger.dump();
        let restored = Ledger::restore(&text, LedgerConfig::default()).unwrap();
        prop_assert_eq!(restored.dump(), text);
        for n in 0..5 {
            prop_assert_eq!(restored.peek(NodeId(n), 1e9).unwrap(), ledger.peek(NodeId(n), 1e9).unwrap());
        }
    }

    #[test]
    fn batch_gas_grows_with_size(n in 1usize..60) {
        let mut ledger = ledger_with(1);
        let records = |n: usize| vec![TransactionRecord::success(1.0, NodeId(0)); n];
        let before = ledger.gas_used();
        ledger.update_node_reputation(&records(n), |_| 15.0, 0.0).unwrap();
        let small = ledger.gas_used() - before;
        let before = ledger.gas_used();
        ledger.update_node_reputation(&records(n + 1), |_| 15.0, 0.0).unwrap();
        prop_assert!(ledger.gas_used() - before >= small);
    }
}

#[test]
fn unknown_node_rejects_the_whole_batch() {
    let mut ledger = ledger_with(2);
    let gas = ledger.gas_used();
    let batch = [
        TransactionRecord::failure(NodeId(0)),
        TransactionRecord::failure(NodeId(9)),
    ];
    assert!(ledger.update_node_reputation(&batch, |_| 15.0, 0.0).is_err());
    assert_eq!(ledger.gas_used(), gas);
    assert_eq!(ledger.pending_batches(), 0);
}

use fresco_core::infra::{synth_sites, AvailabilityTrace, InfraConfig, InfrastructureMap, NodeClass, SynthTraceConfig};
use fresco_core::rng::stream;
use proptest::prelude::*;

fn build(seed: u64, clusters: usize, edge_nodes: usize) -> InfrastructureMap {
    let sites = synth_sites(clusters, 12, &mut stream(seed, "sites"));
    let traces = "synth:ratio=0.6..0.7"
        .parse::<SynthTraceConfig>()
        .unwrap()
        .generate(edge_nodes, seed)
        .unwrap();
    let config = InfraConfig {
        clusters,
        edge_nodes,
        ..InfraConfig::default()
    };
    InfrastructureMap::build(&config, &sites, &traces, seed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn every_cell_has_each_edge_class(seed in any::<u64>(), clusters in 2usize..8, extra in 0usize..10) {
        let edge_nodes = 3 * clusters + extra;
        let map = build(seed, clusters, edge_nodes);
        prop_assert_eq!(map.cells.len(), clusters);
        prop_assert_eq!(map.edge_nodes().count(), edge_nodes);
        for cell in 0..clusters {
            for class in NodeClass::EDGE {
                prop_assert!(map.cell_nodes(cell).any(|n| n.class() == class));
                prop_assert!(map.channel(cell, class).is_some());
            }
            prop_assert!(map.channel(cell, NodeClass::Cd).is_some());
        }
        prop_assert!(map.validate().is_ok());
    }

    #[test]
    fn serialized_map_round_trips(seed in any::<u64>()) {
        let map = build(seed, 3, 9);
        let text = map.to_json().unwrap();
        let back = InfrastructureMap::from_json(&text).unwrap();
        prop_assert_eq!(&back, &map);
        prop_assert_eq!(back.to_json().unwrap(), text);
    }

    #[test]
    fn covering_implies_available_at_both_ends(
        cuts in prop::collection::vec(0.0f64..1.0, 2..12),
        from in 0.0f64..1.0,
        len in 0.0f64..0.3,
    ) {
        let mut cuts = cuts;
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let pairs: Vec<(f64, f64)> = cuts.chunks_exact(2).map(|c| (c[0], c[1])).filter(|(a, b)| a < b).collect();
        let trace = AvailabilityTrace::new(pairs).unwrap();
        let to = (from + len).min(1.0);
        if trace.covers(from, to).unwrap() {
            prop_assert!(trace.is_available(from).unwrap());
            prop_assert!(trace.is_available((from + to) / 2.0).unwrap());
        }
        prop_assert!(trace.ratio() >= 0.0 && trace.ratio() <= 1.0);
    }
}

#[test]
fn same_seed_same_map() {
    assert_eq!(build(5, 4, 14), build(5, 4, 14));
    assert_ne!(build(5, 4, 14), build(6, 4, 14));
}

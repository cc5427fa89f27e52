//! Property tests for the ring model's set-valued queries.

use proptest::prelude::*;
use ringcalc::model::{Flow, FlowIdx, Node, NodeId, RingNetwork};

#[derive(Debug, Clone)]
struct FlowSpec {
    source: usize,
    hops: usize,
    priority: u32,
}

fn network_strategy() -> impl Strategy<Value = RingNetwork> {
    (2usize..=8)
        .prop_flat_map(|m| {
            let flow = (1..=m, 1..=m, 0u32..3).prop_map(|(source, hops, priority)| FlowSpec {
                source,
                hops,
                priority,
            });
            (Just(m), prop::collection::vec(flow, 1..=6))
        })
        .prop_map(|(m, specs)| {
            let nodes = vec![
                Node {
                    rate: 1e9,
                    latency: 6e-7,
                };
                m
            ];
            let flows = specs
                .into_iter()
                .enumerate()
                .map(|(i, s)| Flow {
                    id: format!("f{i}"),
                    source: NodeId(s.source),
                    hops: s.hops,
                    rho: 1000.0,
                    sigma0: 100.0,
                    priority: s.priority,
                    max_frame: 100.0,
                })
                .collect();
            RingNetwork::new(nodes, flows).unwrap()
        })
}

proptest! {
    #[test]
    fn ring_sub_inverts_ring_add(net in network_strategy(), l in 1usize..=8, k in 0usize..20) {
        let m = net.node_count();
        let l = NodeId((l - 1) % m + 1);
        prop_assert_eq!(net.ring_sub(net.ring_add(l, k), k), l);
    }

    #[test]
    fn subpaths_are_ordered_prefixes(net in network_strategy()) {
        for f in 0..net.flows().len() {
            for n in 1..net.flow(f).hops {
                let shorter = net.subpath(f, n).unwrap();
                let longer = net.subpath(f, n + 1).unwrap();
                prop_assert_eq!(&longer[..n], &shorter[..]);
            }
        }
    }

    #[test]
    fn interference_set_is_union_of_crossing_flows(net in network_strategy()) {
        for f in 0..net.flows().len() {
            for n in 1..=net.flow(f).hops {
                let mut union: Vec<FlowIdx> = net
                    .subpath(f, n)
                    .unwrap()
                    .iter()
                    .flat_map(|k| net.crossing_flows(*k))
                    .filter(|i| *i != f)
                    .collect();
                union.sort_unstable();
                union.dedup();
                prop_assert_eq!(net.interference_set(f, n, false).unwrap(), union);
            }
        }
    }

    #[test]
    fn interferer_categories_are_exhaustive_and_exclusive(net in network_strategy()) {
        for f in 0..net.flows().len() {
            for n in 1..=net.flow(f).hops {
                for i in net.interference_set(f, n, false).unwrap() {
                    // Exactly one category: classify returns it, or errors.
                    prop_assert!(net.classify_interferer(i, f, n).is_ok());
                }
            }
        }
    }

    #[test]
    fn hp_lp_partition_crossing_flows(net in network_strategy()) {
        for f in 0..net.flows().len() {
            for k in 1..=net.node_count() {
                let node = NodeId(k);
                let (hp, lp) = net.hp_lp_sets(f, node);
                prop_assert!(hp.iter().all(|i| !lp.contains(i)));
                let mut all: Vec<FlowIdx> = hp.into_iter().chain(lp).collect();
                if net.crosses(f, node) {
                    all.push(f);
                }
                all.sort_unstable();
                prop_assert_eq!(net.crossing_flows(node), all);
            }
        }
    }
}

use super::*;
use crate::model::{Flow, Node, RingNetwork};
use crate::rel_close;

pub(crate) fn uniform_nodes(m: usize, rate: f64, latency: f64) -> Vec<Node> {
    vec![Node { rate, latency }; m]
}

pub(crate) fn simple_flow(id: &str, source: usize, hops: usize, sigma0: f64, rho: f64) -> Flow {
    Flow {
        id: id.into(),
        source: NodeId(source),
        hops,
        rho,
        sigma0,
        priority: 0,
        max_frame: 0.0,
    }
}

/// M=2 ring, R=100, T=0.01, two full-loop flows with sigma0=1, rho=10.
/// Solving the symmetric pair of equations by hand gives 80*T = 2.0, so
/// T(f,1) = 0.025, sigma after one hop = 1.25, T(f,2) = 17/360 and the
/// full-path delay bound 7/120.
pub(crate) fn two_node_fixture() -> RingNetwork {
    RingNetwork::new(
        uniform_nodes(2, 100.0, 0.01),
        vec![
            simple_flow("f1", 1, 2, 1.0, 10.0),
            simple_flow("f2", 2, 2, 1.0, 10.0),
        ],
    )
    .unwrap()
}

fn broadcast_net(m: usize, rate: f64, latency: f64, sigma0: f64, rho: f64) -> RingNetwork {
    let flows = (1..=m)
        .map(|k| simple_flow(&format!("f{k}"), k, m, sigma0, rho))
        .collect();
    RingNetwork::new(uniform_nodes(m, rate, latency), flows).unwrap()
}

#[test]
fn residual_rate_two_node_symmetric() {
    let net = two_node_fixture();
    assert_eq!(residual_rate(&net, 0, 2, Policy::Arbitrary).unwrap(), 90.0);
}

#[test]
fn residual_rate_single_flow_is_min_node_rate() {
    let mut nodes = uniform_nodes(3, 100.0, 0.01);
    nodes[1].rate = 40.0;
    let net = RingNetwork::new(nodes, vec![simple_flow("f", 1, 3, 1.0, 5.0)]).unwrap();
    assert_eq!(residual_rate(&net, 0, 3, Policy::Arbitrary).unwrap(), 40.0);
}

#[test]
fn residual_rate_fp_ignores_lower_priority() {
    let mut high = simple_flow("high", 1, 2, 1.0, 10.0);
    high.priority = 0;
    let mut low = simple_flow("low", 2, 2, 1.0, 50.0);
    low.priority = 1;
    let net = RingNetwork::new(uniform_nodes(2, 100.0, 0.01), vec![high, low]).unwrap();
    assert_eq!(residual_rate(&net, 0, 2, Policy::FixedPriority).unwrap(), 100.0);
    assert_eq!(residual_rate(&net, 0, 2, Policy::Arbitrary).unwrap(), 50.0);
}

#[test]
fn residual_rate_reports_unstable_node() {
    let net = RingNetwork::new(
        uniform_nodes(2, 100.0, 0.01),
        vec![
            simple_flow("f1", 1, 2, 1.0, 50.0),
            simple_flow("f2", 2, 2, 1.0, 50.0),
        ],
    )
    .unwrap();
    // f1's interference at either node is exactly the full rate of f2 = 50,
    // leaving 50 > 0; push to exhaustion with a third flow.
    assert!(residual_rate(&net, 0, 2, Policy::Arbitrary).is_ok());
    let net = RingNetwork::new(
        uniform_nodes(2, 100.0, 0.01),
        vec![
            simple_flow("f1", 1, 2, 1.0, 0.0),
            simple_flow("f2", 2, 2, 1.0, 100.0),
        ],
    )
    .unwrap();
    let err = residual_rate(&net, 0, 2, Policy::Arbitrary).unwrap_err();
    assert!(matches!(err, AnalysisError::UnstableSubpath { .. }));
    assert!(err.is_infeasible());
}

#[test]
fn tandem_single_node_matches_leftover_closure() {
    // One interferer at the only crossed node reduces to (beta - alpha)^.
    let net = RingNetwork::new(
        uniform_nodes(2, 100.0, 0.01),
        vec![
            simple_flow("f", 1, 1, 1.0, 10.0),
            simple_flow("i", 1, 1, 1.0, 10.0),
        ],
    )
    .unwrap();
    let curve = tandem_service_curve(&net, 0, 1, &BurstVector::initial(&net)).unwrap();
    let leftover = leftover_arbitrary(
        RateLatencyCurve::new(100.0, 0.01),
        TokenBucketCurve::new(1.0, 10.0),
    )
    .unwrap();
    assert_eq!(curve.rate, leftover.rate);
    assert!(rel_close(curve.latency, leftover.latency, 1e-12));
}

#[test]
fn tandem_without_interferers_is_pure_concatenation() {
    let mut nodes = uniform_nodes(3, 100.0, 0.01);
    nodes[2].rate = 70.0;
    let net = RingNetwork::new(nodes, vec![simple_flow("f", 1, 3, 1.0, 5.0)]).unwrap();
    let curve = tandem_service_curve(&net, 0, 3, &BurstVector::initial(&net)).unwrap();
    assert_eq!(curve.rate, 70.0);
    assert!(rel_close(curve.latency, 0.03, 1e-12));
}

#[test]
fn tandem_two_nodes_one_interferer() {
    // Interferer sourced at node 1 crossing both nodes:
    // latency = 0.02 + (1 + 10*0.02)/90 = 0.0333...
    let net = RingNetwork::new(
        uniform_nodes(2, 100.0, 0.01),
        vec![
            simple_flow("f", 1, 2, 1.0, 10.0),
            simple_flow("i", 1, 2, 1.0, 10.0),
        ],
    )
    .unwrap();
    let curve = tandem_service_curve(&net, 0, 2, &BurstVector::initial(&net)).unwrap();
    assert_eq!(curve.rate, 90.0);
    assert!(rel_close(curve.latency, 0.02 + 1.2 / 90.0, 1e-12));
}

#[test]
fn tandem_rejects_cyclic_interferer() {
    let net = two_node_fixture();
    let err = tandem_service_curve(&net, 0, 2, &BurstVector::initial(&net)).unwrap_err();
    assert!(matches!(err, AnalysisError::NotFeedforward { .. }));
}

#[test]
fn matrix_rows_of_two_node_fixture() {
    let net = two_node_fixture();
    let sys = build_matrix_system(&net, Policy::Arbitrary).unwrap();
    assert_eq!(sys.dim(), 4);
    let row = sys.index_of(SubpathKey { flow: 0, n: 1 }).unwrap();
    assert!(rel_close(sys.c1[row], 0.01 + 0.1 / 90.0, 1e-12));
    let col = sys.index_of(SubpathKey { flow: 1, n: 1 }).unwrap();
    assert!(rel_close(sys.a1.get(row, col), 1.0 / 90.0, 1e-12));
    // A2 carries exactly one nonzero per row, the flow's own rate.
    for r in 0..sys.dim() {
        let nonzero: Vec<usize> = (0..sys.dim()).filter(|c| sys.a2.get(r, *c) != 0.0).collect();
        assert_eq!(nonzero, vec![r]);
        assert_eq!(sys.a2.get(r, r), net.flow(sys.keys[r].flow).rho);
        assert_eq!(sys.c2[r], net.flow(sys.keys[r].flow).sigma0);
    }
}

#[test]
fn acyclic_instance_has_zero_variable_columns() {
    // f2's path never reaches f1's source, and vice versa interference is
    // one-directional: no upstream bursts anywhere.
    let net = RingNetwork::new(
        uniform_nodes(4, 100.0, 0.01),
        vec![
            simple_flow("f1", 1, 2, 1.0, 10.0),
            simple_flow("f2", 1, 1, 2.0, 5.0),
        ],
    )
    .unwrap();
    let sys = build_matrix_system(&net, Policy::Arbitrary).unwrap();
    for r in 0..sys.dim() {
        for c in 0..sys.dim() {
            assert_eq!(sys.a1.get(r, c), 0.0);
        }
    }
    let solution = solve_system(&net, &sys).unwrap();
    for (row, key) in sys.keys.iter().enumerate() {
        assert_eq!(solution.latency(key.flow, key.n), sys.c1[row]);
    }
}

#[test]
fn broadcast_rows_have_m_minus_one_variable_coefficients() {
    for m in [3usize, 5, 7] {
        let net = broadcast_net(m, 1e9, 6e-7, 1328.0, 1e5);
        let sys = build_matrix_system(&net, Policy::Arbitrary).unwrap();
        for r in 0..sys.dim() {
            let nonzero = (0..sys.dim()).filter(|c| sys.a1.get(r, *c) != 0.0).count();
            assert_eq!(nonzero, m - 1, "row {r} of M={m}");
        }
    }
}

#[test]
fn solve_system_two_node_fixture_hand_values() {
    let net = two_node_fixture();
    let sys = build_matrix_system(&net, Policy::Arbitrary).unwrap();
    let solution = solve_system(&net, &sys).unwrap();
    assert!(rel_close(solution.latency(0, 1), 0.025, 1e-9));
    assert!(rel_close(solution.bursts().get(0, 1), 1.25, 1e-9));
    assert!(rel_close(solution.latency(0, 2), 17.0 / 360.0, 1e-9));
    let curve = e2e_service_curve(&net, 0, 2, Policy::Arbitrary, solution.bursts()).unwrap();
    assert_eq!(curve.rate, 90.0);
    assert!(rel_close(curve.latency, solution.latency(0, 2), 1e-12));
    let bound = delay_bound(&net, &curve);
    assert!(rel_close(bound.bound, 7.0 / 120.0, 1e-9));
}

#[test]
fn fixed_point_oracle_two_node_fixture() {
    let net = two_node_fixture();
    let solution = fixed_point_oracle(&net, Policy::Arbitrary).unwrap();
    assert!(rel_close(solution.latency(0, 1), 0.025, 1e-11));
    assert!(rel_close(solution.bursts().get(0, 1), 1.25, 1e-11));
}

#[test]
fn fixed_point_oracle_converges_immediately_on_feedforward() {
    let net = RingNetwork::new(
        uniform_nodes(4, 100.0, 0.01),
        vec![
            simple_flow("f1", 1, 2, 1.0, 10.0),
            simple_flow("f2", 1, 1, 2.0, 5.0),
        ],
    )
    .unwrap();
    let picard = fixed_point_oracle(&net, Policy::Arbitrary).unwrap();
    let sys = build_matrix_system(&net, Policy::Arbitrary).unwrap();
    for (row, key) in sys.keys.iter().enumerate() {
        assert_eq!(picard.latency(key.flow, key.n), sys.c1[row]);
    }
}

#[test]
fn fixed_point_oracle_diverges_above_broadcast_bound() {
    // rho above R/(2(M-1)) for M=4: threshold is R/6.
    let net = broadcast_net(4, 100.0, 0.01, 1.0, 20.0);
    assert!(matches!(
        fixed_point_oracle(&net, Policy::Arbitrary),
        Err(AnalysisError::Diverged)
    ));
}

#[test]
fn solve_rejects_instance_above_broadcast_bound() {
    let net = broadcast_net(4, 100.0, 0.01, 1.0, 20.0);
    let err = solve_network(&net, Policy::Arbitrary).unwrap_err();
    assert!(err.is_infeasible(), "{err}");
}

#[test]
fn solve_network_matches_matrix_route() {
    let net = two_node_fixture();
    let sys = build_matrix_system(&net, Policy::Arbitrary).unwrap();
    let full = solve_system(&net, &sys).unwrap();
    let reduced = solve_network(&net, Policy::Arbitrary).unwrap();
    for key in full.keys() {
        assert!(rel_close(
            full.latency(key.flow, key.n),
            reduced.latency(key.flow, key.n),
            1e-12
        ));
        assert!(rel_close(
            full.bursts().get(key.flow, key.n),
            reduced.bursts().get(key.flow, key.n),
            1e-12
        ));
    }
    // Sylvester: the full-system determinant equals the reduced one.
    assert!(rel_close(sys.determinant(), reduced.det_margin(), 1e-12));
}

#[test]
fn e2e_equals_tandem_on_feedforward_instance() {
    let net = RingNetwork::new(
        uniform_nodes(5, 100.0, 0.01),
        vec![
            simple_flow("f", 1, 3, 1.0, 10.0),
            simple_flow("i1", 2, 2, 2.0, 5.0),
            simple_flow("i2", 3, 1, 0.5, 3.0),
        ],
    )
    .unwrap();
    let solution = solve_network(&net, Policy::Arbitrary).unwrap();
    for n in 1..=3 {
        let e2e = e2e_service_curve(&net, 0, n, Policy::Arbitrary, solution.bursts()).unwrap();
        let tandem = tandem_service_curve(&net, 0, n, solution.bursts()).unwrap();
        assert_eq!(e2e, tandem, "field-exact equality at n={n}");
    }
}

#[test]
fn fig2_broadcast_pays_cyclic_bursts_twice() {
    // Three-node broadcast: for the flow sourced at node 1, both other
    // flows converge once at their own source and once at node 1, so each
    // contributes its initial burst and its propagated burst.
    let net = broadcast_net(3, 100.0, 0.01, 1.0, 5.0);
    let ctx = flow_context(&net, 0, Policy::Arbitrary).unwrap();
    assert_eq!(ctx.variable, vec![(1, 2), (2, 1)]);
    let solution = solve_network(&net, Policy::Arbitrary).unwrap();
    let curve = e2e_service_curve(&net, 0, 3, Policy::Arbitrary, solution.bursts()).unwrap();
    // Hand assembly: R' = 90, constant = 3T + (2*sigma0 + 2*rho*3T)/R',
    // variable = (sigma(f2,2) + sigma(f3,1))/R'.
    let constant = 0.03 + (2.0 + 2.0 * 5.0 * 0.03) / 90.0;
    let upstream =
        (solution.bursts().get(1, 2) + solution.bursts().get(2, 1)) / 90.0;
    assert!(rel_close(curve.latency, constant + upstream, 1e-12));
    assert!(solution.bursts().get(2, 1) > net.flow(2).sigma0);
}

#[test]
fn delay_bound_zero_burst_flow_alone() {
    let net = RingNetwork::new(
        uniform_nodes(3, 100.0, 0.01),
        vec![simple_flow("f", 1, 3, 0.0, 0.0)],
    )
    .unwrap();
    let solution = solve_network(&net, Policy::Arbitrary).unwrap();
    let curve = e2e_service_curve(&net, 0, 3, Policy::Arbitrary, solution.bursts()).unwrap();
    let bound = delay_bound(&net, &curve);
    assert!(rel_close(bound.bound, 0.03, 1e-12));
}

#[test]
fn delay_bound_is_horizontal_deviation() {
    let net = two_node_fixture();
    let solution = solve_network(&net, Policy::Arbitrary).unwrap();
    let curve = e2e_service_curve(&net, 0, 2, Policy::Arbitrary, solution.bursts()).unwrap();
    let bound = delay_bound(&net, &curve);
    let h = horizontal_deviation(
        TokenBucketCurve::new(net.flow(0).sigma0, net.flow(0).rho),
        curve.as_rate_latency(),
    )
    .unwrap();
    assert_eq!(bound.bound, h);
}

#[test]
fn burst_growth_identity_on_solved_entries() {
    let net = broadcast_net(5, 1e9, 6e-7, 1328.0, 1e6);
    let solution = solve_network(&net, Policy::Arbitrary).unwrap();
    for key in solution.keys() {
        let expected =
            net.flow(key.flow).sigma0 + net.flow(key.flow).rho * solution.latency(key.flow, key.n);
        assert_eq!(solution.bursts().get(key.flow, key.n), expected);
    }
}

#[test]
fn broadcast_determinant_matches_cubic_closed_form() {
    // M=3 broadcast: det(Id - A1*A2) = -2(x+1)^2(x - 1/2), x = rho/(R-2rho).
    let rate = 1e9;
    for rho in [5e7, 2e8, 2.4e8] {
        let net = broadcast_net(3, rate, 6e-7, 1328.0, rho);
        let sys = build_matrix_system(&net, Policy::Arbitrary).unwrap();
        let x = rho / (rate - 2.0 * rho);
        let closed = -2.0 * (x + 1.0) * (x + 1.0) * (x - 0.5);
        assert!(
            rel_close(sys.determinant(), closed, 1e-9),
            "rho={rho}: {} vs {closed}",
            sys.determinant()
        );
    }
}

#[test]
fn broadcast_stability_thresholds() {
    let v = broadcast_stability(10, 1e9, 1e7).unwrap();
    assert!(v.stable);
    assert!(rel_close(v.threshold_rho, 1e9 / 18.0, 1e-12));

    let v2 = broadcast_stability(2, 100.0, 10.0).unwrap();
    assert!(rel_close(v2.threshold_rho, 50.0, 1e-12));
    let x = v2.x.unwrap();
    assert!(rel_close(v2.determinant.unwrap(), 1.0 - x * x, 1e-12));

    let v3 = broadcast_stability(6, 1e9, 0.0).unwrap();
    assert!(v3.stable);
    assert!(rel_close(v3.determinant.unwrap(), 1.0, 1e-12));

    assert!(matches!(
        broadcast_stability(1, 1e9, 0.0),
        Err(AnalysisError::DegenerateRing { m: 1 })
    ));
}

#[test]
fn broadcast_stability_boundary_is_unstable() {
    let v = broadcast_stability(10, 1e9, 1e9 / 18.0).unwrap();
    assert!(!v.stable);
    assert!(v.determinant.unwrap().abs() < 1e-9);
    let above = broadcast_stability(10, 1e9, 1e9 / 9.0 + 1.0).unwrap();
    assert!(!above.stable);
}

#[test]
fn fp_with_flat_priorities_equals_arbitrary() {
    let net = broadcast_net(4, 1e9, 6e-7, 1328.0, 1e6);
    let arb = solve_network(&net, Policy::Arbitrary).unwrap();
    let fp = solve_network(&net, Policy::FixedPriority).unwrap();
    for key in arb.keys() {
        assert_eq!(
            arb.latency(key.flow, key.n),
            fp.latency(key.flow, key.n),
            "flat priorities must coincide exactly at {key:?}"
        );
    }
}

#[test]
fn fp_bound_not_worse_when_lower_priority_has_zero_frames() {
    // Two priority levels, lower-priority frames of size zero: the FP bound
    // for the high-priority flow must not exceed the arbitrary one.
    let mut flows = vec![
        simple_flow("high1", 1, 3, 1000.0, 1e6),
        simple_flow("high2", 2, 3, 1000.0, 1e6),
        simple_flow("low", 3, 3, 5000.0, 2e6),
    ];
    flows[2].priority = 1;
    let net = RingNetwork::new(uniform_nodes(3, 1e9, 6e-7), flows).unwrap();
    let arb = solve_network(&net, Policy::Arbitrary).unwrap();
    let fp = solve_network(&net, Policy::FixedPriority).unwrap();
    let curve_arb = e2e_service_curve(&net, 0, 3, Policy::Arbitrary, arb.bursts()).unwrap();
    let curve_fp = e2e_service_curve(&net, 0, 3, Policy::FixedPriority, fp.bursts()).unwrap();
    assert!(delay_bound(&net, &curve_fp).bound <= delay_bound(&net, &curve_arb).bound);
}

fn full_path_bound(net: &RingNetwork, policy: Policy) -> f64 {
    let solution = solve_network(net, policy).unwrap();
    let curve = e2e_service_curve(net, 0, net.flow(0).hops, policy, solution.bursts()).unwrap();
    delay_bound(net, &curve).bound
}

#[test]
fn delay_bound_monotone_in_every_parameter() {
    let base_nodes = uniform_nodes(3, 1e9, 6e-7);
    let base_flows = vec![
        simple_flow("f1", 1, 3, 1328.0, 1e6),
        simple_flow("f2", 2, 3, 2000.0, 2e6),
        simple_flow("f3", 3, 2, 500.0, 5e5),
    ];
    let base = full_path_bound(
        &RingNetwork::new(base_nodes.clone(), base_flows.clone()).unwrap(),
        Policy::Arbitrary,
    );

    for i in 0..base_flows.len() {
        let mut flows = base_flows.clone();
        flows[i].sigma0 *= 1.01;
        let bumped = full_path_bound(
            &RingNetwork::new(base_nodes.clone(), flows).unwrap(),
            Policy::Arbitrary,
        );
        assert!(bumped >= base, "sigma0 of flow {i}");

        let mut flows = base_flows.clone();
        flows[i].rho *= 1.01;
        let bumped = full_path_bound(
            &RingNetwork::new(base_nodes.clone(), flows).unwrap(),
            Policy::Arbitrary,
        );
        assert!(bumped >= base, "rho of flow {i}");
    }
    for k in 0..base_nodes.len() {
        let mut nodes = base_nodes.clone();
        nodes[k].latency *= 1.01;
        let bumped = full_path_bound(
            &RingNetwork::new(nodes, base_flows.clone()).unwrap(),
            Policy::Arbitrary,
        );
        assert!(bumped >= base, "latency of node {k}");

        let mut nodes = base_nodes.clone();
        nodes[k].rate *= 0.99;
        let bumped = full_path_bound(
            &RingNetwork::new(nodes, base_flows.clone()).unwrap(),
            Policy::Arbitrary,
        );
        assert!(bumped >= base, "rate of node {k}");
    }
}

#[test]
fn pboo_concatenation_dominates_additive_bound() {
    let net = RingNetwork::new(
        uniform_nodes(5, 100.0, 0.01),
        vec![
            simple_flow("f", 1, 4, 1.0, 10.0),
            simple_flow("i1", 2, 2, 2.0, 5.0),
            simple_flow("i2", 3, 2, 0.5, 3.0),
        ],
    )
    .unwrap();
    let solution = solve_network(&net, Policy::Arbitrary).unwrap();
    let curve = e2e_service_curve(&net, 0, 4, Policy::Arbitrary, solution.bursts()).unwrap();
    let concatenated = delay_bound(&net, &curve).bound;
    let additive = additive_delay_bound(&net, 0, 4).unwrap();
    assert!(
        concatenated <= additive,
        "concatenated {concatenated} vs additive {additive}"
    );
}

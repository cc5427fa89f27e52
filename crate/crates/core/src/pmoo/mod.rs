//! End-to-end service curves and delay bounds for ring networks with cyclic
//! dependencies (the Ring-PMOO analysis).
//!
//! For a flow of interest `f` and a hop count `n`, the service curve offered
//! along `subpath_f(n)` is a rate-latency curve whose rate is the worst
//! residual rate over the crossed nodes and whose latency charges every
//! interfering flow's burst once per convergence point with `f`. Interferers
//! sourced on the subpath pay their initial burst; interferers arriving at
//! `f`'s source from upstream pay the burst they have accumulated there —
//! a value that itself depends on the latencies being computed. The
//! [`system`] submodule resolves that circular dependency as a linear system
//! over all per-subpath latencies and propagated bursts.
//!
//! Two multiplexing policies are supported within an aggregate: arbitrary
//! (any interferer may delay `f`) and non-preemptive fixed priority (only
//! higher-or-equal priority flows interfere; lower priority contributes one
//! maximum frame of blocking per node).

pub mod system;

pub use system::{
    build_matrix_system, fixed_point_oracle, solve_network, solve_system, MatrixSystem,
    NetworkSolution,
};

use crate::curves::{
    horizontal_deviation, leftover_arbitrary, RateLatencyCurve, TokenBucketCurve,
};
use crate::model::{FlowIdx, InterfererCategory, ModelError, NodeId, RingNetwork};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    /// The interfering rate meets or exceeds the service rate somewhere on
    /// the subpath, so no finite residual service curve exists.
    #[error("unstable subpath for flow {flow}: residual rate {residual} at node {node}")]
    UnstableSubpath {
        flow: String,
        node: usize,
        residual: f64,
    },
    /// A tandem-only computation was asked to handle an interferer that
    /// arrives at the flow's source from upstream (the cyclic case).
    #[error("flow {interferer} interferes with {flow} through its source: not feedforward")]
    NotFeedforward { flow: String, interferer: String },
    /// `Id - A1*A2` is singular: the burst/latency fixed point has no
    /// solution and the network is infeasible (unbounded delays).
    #[error("burst/latency system is singular: network infeasible")]
    SingularMatrix,
    /// The system solved to a negative latency or burst: the parameters are
    /// beyond the validity region, reported as infeasible rather than
    /// clamped.
    #[error("burst/latency system produced a negative solution: network infeasible")]
    NegativeSolution,
    /// The fixed-point iteration grew beyond any plausible bound.
    #[error("fixed-point iteration diverged: network infeasible")]
    Diverged,
    #[error("ring of {m} node(s) is degenerate; need at least 2")]
    DegenerateRing { m: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl AnalysisError {
    /// Whether the error is an infeasibility verdict (as opposed to a usage
    /// error such as an out-of-range hop count).
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            AnalysisError::UnstableSubpath { .. }
                | AnalysisError::SingularMatrix
                | AnalysisError::NegativeSolution
                | AnalysisError::Diverged
        )
    }
}

/// Multiplexing policy within an aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    Arbitrary,
    FixedPriority,
}

/// Identifies the pair (flow, number of hops crossed), `1 <= n <= h_flow`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SubpathKey {
    pub flow: FlowIdx,
    pub n: usize,
}

/// End-to-end rate-latency service curve for one subpath.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubpathServiceCurve {
    pub key: SubpathKey,
    /// Residual rate, bits/second.
    pub rate: f64,
    /// Accumulated latency, seconds.
    pub latency: f64,
}

impl SubpathServiceCurve {
    pub fn as_rate_latency(&self) -> RateLatencyCurve {
        RateLatencyCurve::new(self.rate, self.latency)
    }
}

/// Worst-case delay bound for one subpath.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayBound {
    pub key: SubpathKey,
    /// Seconds.
    pub bound: f64,
}

/// Burst of every flow after each number of crossed nodes: entry `(i, m)`
/// holds the burst of flow `i` at the output of its m-th node, and entry
/// `(i, 0)` holds the initial burst `sigma_i^0`.
#[derive(Debug, Clone, PartialEq)]
pub struct BurstVector {
    entries: Vec<Vec<f64>>,
}

impl BurstVector {
    /// All entries set to each flow's initial burst.
    pub fn initial(net: &RingNetwork) -> Self {
        BurstVector {
            entries: net
                .flows()
                .iter()
                .map(|f| vec![f.sigma0; f.hops + 1])
                .collect(),
        }
    }

    pub fn get(&self, flow: FlowIdx, m: usize) -> f64 {
        self.entries[flow][m]
    }

    pub fn set(&mut self, flow: FlowIdx, m: usize, value: f64) {
        assert!(m >= 1, "entry (i, 0) is the fixed initial burst");
        self.entries[flow][m] = value;
    }

    pub fn hops(&self, flow: FlowIdx) -> usize {
        self.entries[flow].len() - 1
    }

    pub fn iter(&self) -> impl Iterator<Item = (FlowIdx, usize, f64)> + '_ {
        self.entries
            .iter()
            .enumerate()
            .flat_map(|(f, row)| row.iter().enumerate().map(move |(m, v)| (f, m, *v)))
    }
}

/// Per-flow, per-policy view of the latency equation: everything in the
/// equation for `T^{subpath_f(n)}` except the unknown upstream bursts.
#[derive(Debug, Clone)]
pub(crate) struct FlowContext {
    /// Residual rate per `n` (index `n - 1`).
    pub residual: Vec<f64>,
    /// Constant part of the latency per `n`: node latencies (with any
    /// lower-priority blocking) plus all initial-burst and rate terms.
    pub constant: Vec<f64>,
    /// Upstream interferers paying their propagated burst at `f`'s source:
    /// `(i, m)` meaning burst entry `(i, m)`, each with coefficient
    /// `1/residual[n-1]` in row `(f, n)`. Independent of `n`.
    pub variable: Vec<(FlowIdx, usize)>,
}

/// Effective latency of node `k` as seen by flow `f`: the technological
/// latency plus, under fixed priority, one maximum lower-priority frame.
pub fn node_latency(net: &RingNetwork, f: FlowIdx, k: NodeId, policy: Policy) -> f64 {
    let base = net.node(k).latency;
    match policy {
        Policy::Arbitrary => base,
        Policy::FixedPriority => {
            let (_, lp) = net.hp_lp_sets(f, k);
            let blocking = lp
                .iter()
                .map(|j| net.flow(*j).max_frame)
                .fold(0.0, f64::max);
            base + blocking / net.node(k).rate
        }
    }
}

fn interferes(net: &RingNetwork, i: FlowIdx, f: FlowIdx, policy: Policy) -> bool {
    i != f
        && match policy {
            Policy::Arbitrary => true,
            Policy::FixedPriority => net.flow(i).priority <= net.flow(f).priority,
        }
}

/// Worst residual rate over `subpath_f(n)`: at each crossed node, the node
/// rate minus the rates of every interfering flow under the policy.
pub fn residual_rate(
    net: &RingNetwork,
    f: FlowIdx,
    n: usize,
    policy: Policy,
) -> Result<f64, AnalysisError> {
    let subpath = net.subpath(f, n)?;
    let mut worst = f64::INFINITY;
    for k in subpath {
        let interfering: f64 = net
            .crossing_flows(k)
            .into_iter()
            .filter(|i| interferes(net, *i, f, policy))
            .map(|i| net.flow(i).rho)
            .sum();
        let residual = net.node(k).rate - interfering;
        if residual <= 0.0 {
            return Err(AnalysisError::UnstableSubpath {
                flow: net.flow(f).id.clone(),
                node: k.0,
                residual,
            });
        }
        worst = worst.min(residual);
    }
    Ok(worst)
}

/// Burst-vector entry standing for `sigma_i^{f.first (-) 1}`: flow `i`'s
/// burst after crossing the `m` nodes from its source through the
/// predecessor of `f`'s source. Degenerates to the initial burst if `i`
/// would not have crossed that predecessor.
pub(crate) fn upstream_burst_entry(net: &RingNetwork, i: FlowIdx, f: FlowIdx) -> (FlowIdx, usize) {
    let pred = net.ring_sub(net.flow(f).source, 1);
    let m = net.distance(net.flow(i).source, pred) + 1;
    if m <= net.flow(i).hops {
        (i, m)
    } else {
        (i, 0)
    }
}

/// Incremental evaluation of the residual rate and the constant latency
/// terms over growing subpaths of `f`, up to `max_n` hops. Interference sets
/// only grow with `n`: when the subpath reaches a node, that node's latency
/// and every crossing interferer's rate term join the sums, and interferers
/// sourced there start paying their entry burst (taken from `sigma0_of`, so
/// tandem computations can substitute a burst vector and still produce
/// bit-identical values).
fn accumulate_constants(
    net: &RingNetwork,
    f: FlowIdx,
    policy: Policy,
    max_n: usize,
    sigma0_of: &dyn Fn(FlowIdx) -> f64,
) -> Result<(Vec<f64>, Vec<f64>), AnalysisError> {
    let flow = net.flow(f);
    let mut residual = Vec::with_capacity(max_n);
    let mut constant = Vec::with_capacity(max_n);
    let mut node_lat_sum = 0.0;
    let mut sigma0_sum = 0.0;
    let mut rate_lat_sum = 0.0;
    let mut min_residual = f64::INFINITY;
    for n in 1..=max_n {
        let k = net.ring_add(flow.source, n - 1);
        let t_k = node_latency(net, f, k, policy);
        node_lat_sum += t_k;
        let mut interfering_rate = 0.0;
        for i in net.crossing_flows(k) {
            if !interferes(net, i, f, policy) {
                continue;
            }
            interfering_rate += net.flow(i).rho;
            rate_lat_sum += net.flow(i).rho * t_k;
            if net.flow(i).source == k {
                sigma0_sum += sigma0_of(i);
            }
        }
        let r_k = net.node(k).rate - interfering_rate;
        if r_k <= 0.0 {
            return Err(AnalysisError::UnstableSubpath {
                flow: flow.id.clone(),
                node: k.0,
                residual: r_k,
            });
        }
        min_residual = min_residual.min(r_k);
        residual.push(min_residual);
        constant.push(node_lat_sum + (sigma0_sum + rate_lat_sum) / min_residual);
    }
    Ok((residual, constant))
}

pub(crate) fn flow_context(
    net: &RingNetwork,
    f: FlowIdx,
    policy: Policy,
) -> Result<FlowContext, AnalysisError> {
    let hops = net.flow(f).hops;
    let f_source = net.flow(f).source;
    let (residual, constant) =
        accumulate_constants(net, f, policy, hops, &|i| net.flow(i).sigma0)?;

    let mut variable: Vec<(FlowIdx, usize)> = Vec::new();
    for i in 0..net.flows().len() {
        if interferes(net, i, f, policy)
            && net.crosses(i, f_source)
            && net.flow(i).source != f_source
        {
            variable.push(upstream_burst_entry(net, i, f));
        }
    }

    Ok(FlowContext {
        residual,
        constant,
        variable,
    })
}

/// End-to-end service curve of `f` over `subpath_f(n)` in a tandem (purely
/// feedforward) interference pattern under arbitrary multiplexing: every
/// interferer pays its burst at its own source. Interferers arriving through
/// `f`'s source are rejected as [`AnalysisError::NotFeedforward`]; resolving
/// those requires the full ring analysis.
pub fn tandem_service_curve(
    net: &RingNetwork,
    f: FlowIdx,
    n: usize,
    bursts: &BurstVector,
) -> Result<SubpathServiceCurve, AnalysisError> {
    for i in net.interference_set(f, n, false)? {
        if net.classify_interferer(i, f, n)? != InterfererCategory::SourceOnSubpath {
            return Err(AnalysisError::NotFeedforward {
                flow: net.flow(f).id.clone(),
                interferer: net.flow(i).id.clone(),
            });
        }
    }
    let (residual, constant) =
        accumulate_constants(net, f, Policy::Arbitrary, n, &|i| bursts.get(i, 0))?;
    Ok(SubpathServiceCurve {
        key: SubpathKey { flow: f, n },
        rate: residual[n - 1],
        latency: constant[n - 1],
    })
}

/// End-to-end service curve of `f` over `subpath_f(n)`, assembled from the
/// closed form with the solved upstream bursts.
pub fn e2e_service_curve(
    net: &RingNetwork,
    f: FlowIdx,
    n: usize,
    policy: Policy,
    bursts: &BurstVector,
) -> Result<SubpathServiceCurve, AnalysisError> {
    if n < 1 || n > net.flow(f).hops {
        return Err(ModelError::InvalidHopCount {
            flow: net.flow(f).id.clone(),
            n,
            hops: net.flow(f).hops,
        }
        .into());
    }
    let ctx = flow_context(net, f, policy)?;
    let rate = ctx.residual[n - 1];
    let upstream: f64 = ctx
        .variable
        .iter()
        .map(|(i, m)| bursts.get(*i, *m))
        .sum();
    Ok(SubpathServiceCurve {
        key: SubpathKey { flow: f, n },
        rate,
        latency: ctx.constant[n - 1] + upstream / rate,
    })
}

/// Delay bound for flow `f` against its end-to-end service curve:
/// `sigma_f^0 / rate + latency`, the horizontal deviation of the flow's
/// initial arrival curve against the curve.
pub fn delay_bound(net: &RingNetwork, curve: &SubpathServiceCurve) -> DelayBound {
    let flow = net.flow(curve.key.flow);
    DelayBound {
        key: curve.key,
        bound: flow.sigma0 / curve.rate + curve.latency,
    }
}

/// Stability verdict for broadcast rings with one `(sigma, rho)` flow per
/// node, with the closed-form determinant of `Id - A1*A2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityVerdict {
    pub stable: bool,
    /// Largest stable per-flow rate, `R / (2(M-1))`.
    pub threshold_rho: f64,
    /// `x = rho / (R - (M-1) rho)`, when the residual rate is positive.
    pub x: Option<f64>,
    /// Closed-form determinant `(1-M)(x+1)^(M-1)(x - 1/(M-1))`; its margin
    /// above zero indicates how far the system is from singular.
    pub determinant: Option<f64>,
}

/// Closed-form stability check for the broadcast case: one flow per node,
/// all full loop, identical `(sigma, rho)` and node rate `R`. Stable exactly
/// when `x < 1/(M-1)`, i.e. `rho < R/(2(M-1))`; the boundary itself makes
/// the system singular and is reported unstable.
pub fn broadcast_stability(
    m: usize,
    rate: f64,
    rho: f64,
) -> Result<StabilityVerdict, AnalysisError> {
    if m < 2 {
        return Err(AnalysisError::DegenerateRing { m });
    }
    assert!(rate > 0.0 && rho >= 0.0);
    let m_f = m as f64;
    let threshold_rho = rate / (2.0 * (m_f - 1.0));
    let residual = rate - (m_f - 1.0) * rho;
    if residual <= 0.0 {
        return Ok(StabilityVerdict {
            stable: false,
            threshold_rho,
            x: None,
            determinant: None,
        });
    }
    let x = rho / residual;
    let determinant = (1.0 - m_f) * (x + 1.0).powi(m as i32 - 1) * (x - 1.0 / (m_f - 1.0));
    Ok(StabilityVerdict {
        stable: x < 1.0 / (m_f - 1.0),
        threshold_rho,
        x: Some(x),
        determinant: Some(determinant),
    })
}

/// Additive reference bound for feedforward interference patterns: walk the
/// subpath node by node, give every flow its single-node left-over curve
/// against the other flows' current arrival curves, sum the per-node
/// horizontal deviations of `f`, and propagate every flow's burst through
/// its own left-over latency. Pays `f`'s burst (and the interferers')
/// at every crossed node, which is what the concatenated curve avoids.
pub fn additive_delay_bound(
    net: &RingNetwork,
    f: FlowIdx,
    n: usize,
) -> Result<f64, AnalysisError> {
    let subpath = net.subpath(f, n)?;
    for i in net.interference_set(f, n, false)? {
        if net.classify_interferer(i, f, n)? != InterfererCategory::SourceOnSubpath {
            return Err(AnalysisError::NotFeedforward {
                flow: net.flow(f).id.clone(),
                interferer: net.flow(i).id.clone(),
            });
        }
    }
    let mut bursts: Vec<f64> = net.flows().iter().map(|fl| fl.sigma0).collect();
    let mut total = 0.0;
    for k in subpath {
        let beta = RateLatencyCurve::new(net.node(k).rate, net.node(k).latency);
        let crossing = net.crossing_flows(k);
        let mut latencies: Vec<(FlowIdx, f64)> = Vec::with_capacity(crossing.len());
        for j in &crossing {
            let cross: Vec<TokenBucketCurve> = crossing
                .iter()
                .filter(|i| *i != j)
                .map(|i| TokenBucketCurve::new(bursts[*i], net.flow(*i).rho))
                .collect();
            let aggregate = TokenBucketCurve::new(
                cross.iter().map(|a| a.sigma).sum(),
                cross.iter().map(|a| a.rho).sum(),
            );
            let leftover = leftover_arbitrary(beta, aggregate).map_err(|_| {
                AnalysisError::UnstableSubpath {
                    flow: net.flow(*j).id.clone(),
                    node: k.0,
                    residual: beta.rate - aggregate.rho,
                }
            })?;
            if *j == f {
                let alpha = TokenBucketCurve::new(bursts[f], net.flow(f).rho);
                total += horizontal_deviation(alpha, leftover).map_err(|_| {
                    AnalysisError::UnstableSubpath {
                        flow: net.flow(f).id.clone(),
                        node: k.0,
                        residual: leftover.rate - alpha.rho,
                    }
                })?;
            }
            latencies.push((*j, leftover.latency));
        }
        for (j, latency) in latencies {
            bursts[j] += net.flow(j).rho * latency;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests;

//! System model: a unidirectional ring of `M` nodes serving `I` flows with
//! fixed contiguous paths, plus the interference-set queries every analysis
//! is built on.
//!
//! Nodes are labelled `1..=M`; `l (+) k` and `l (-) k` denote the k-th
//! successor and predecessor on the ring. Flow paths are arcs: the source
//! node followed by `hops - 1` successors, never visiting a node twice
//! (`hops <= M`). The network is immutable after validation, so every query
//! is a pure function and safe for concurrent readers.

use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("flow {flow}: hop count {n} outside [1, {hops}]")]
    InvalidHopCount { flow: String, n: usize, hops: usize },
    #[error("flow {interferer} does not interfere with {flow} on its first {n} hops")]
    NotAnInterferer {
        interferer: String,
        flow: String,
        n: usize,
    },
}

#[derive(Debug, Error, PartialEq)]
#[error("invalid network: {0}")]
pub struct ValidationError(pub String);

/// 1-based ring node label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A ring node offering a strict rate-latency service curve to the aggregate
/// it serves.
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    /// Service rate, bits/second.
    pub rate: f64,
    /// Technological latency, seconds.
    pub latency: f64,
}

/// Position of a flow in the network's flow list; all set-valued queries
/// return indices in ascending order, which makes every iteration
/// deterministic.
pub type FlowIdx = usize;

/// A leaky-bucket constrained flow with a fixed ring path.
#[derive(Debug, Clone, PartialEq)]
pub struct Flow {
    pub id: String,
    /// First physical node crossed.
    pub source: NodeId,
    /// Number of nodes crossed, in `[1, M]`.
    pub hops: usize,
    /// Sustained rate, bits/second.
    pub rho: f64,
    /// Initial burst at the (virtual) source, bits. The burst may exceed one
    /// frame; `max_frame >= sigma0` is not required.
    pub sigma0: f64,
    /// Priority level, 0 highest.
    pub priority: u32,
    /// Maximum frame length including protocol overhead, bits.
    pub max_frame: f64,
}

/// How an interfering flow `i` relates to the flow of interest `f` on
/// `subpath_f(n)`. The categories drive which burst terms the ring analysis
/// charges for `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterfererCategory {
    /// `i` converges with `f` only at its own source, which lies on the
    /// subpath: pays its initial burst there.
    SourceOnSubpath,
    /// `i` converges with `f` only at `f`'s source (arriving from upstream):
    /// pays its propagated burst there.
    CrossesFlowSource,
    /// Two convergence points (`i.first` on the subpath and `f.first` on
    /// `i`'s path): the cyclic case, paying both bursts.
    Both,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RingNetwork {
    nodes: Vec<Node>,
    flows: Vec<Flow>,
    priority_levels: u32,
}

impl RingNetwork {
    /// Validates and freezes a network. Rejects out-of-range node indices,
    /// hop counts above `M`, negative traffic parameters, duplicate flow
    /// ids, and any node whose aggregate arrival rate exceeds its service
    /// rate (reported with the offending node).
    pub fn new(nodes: Vec<Node>, flows: Vec<Flow>) -> Result<Self, ValidationError> {
        if nodes.is_empty() {
            return Err(ValidationError("node list is empty".into()));
        }
        let m = nodes.len();
        for (k, node) in nodes.iter().enumerate() {
            if node.rate <= 0.0 || !node.rate.is_finite() {
                return Err(ValidationError(format!(
                    "node {}: rate_bps must be > 0, got {}",
                    k + 1,
                    node.rate
                )));
            }
            if node.latency < 0.0 || !node.latency.is_finite() {
                return Err(ValidationError(format!(
                    "node {}: latency_s must be >= 0, got {}",
                    k + 1,
                    node.latency
                )));
            }
        }
        for flow in &flows {
            if flow.source.0 < 1 || flow.source.0 > m {
                return Err(ValidationError(format!(
                    "flow {}: source {} outside [1, {m}]",
                    flow.id, flow.source
                )));
            }
            if flow.hops < 1 || flow.hops > m {
                return Err(ValidationError(format!(
                    "flow {}: hops {} outside [1, {m}]",
                    flow.id, flow.hops
                )));
            }
            if flow.rho < 0.0 || !flow.rho.is_finite() {
                return Err(ValidationError(format!(
                    "flow {}: rho_bps must be >= 0, got {}",
                    flow.id, flow.rho
                )));
            }
            if flow.sigma0 < 0.0 || !flow.sigma0.is_finite() {
                return Err(ValidationError(format!(
                    "flow {}: sigma0_bits must be >= 0, got {}",
                    flow.id, flow.sigma0
                )));
            }
            if flow.max_frame < 0.0 || !flow.max_frame.is_finite() {
                return Err(ValidationError(format!(
                    "flow {}: max_frame_bits must be >= 0, got {}",
                    flow.id, flow.max_frame
                )));
            }
        }
        let mut ids: Vec<&str> = flows.iter().map(|f| f.id.as_str()).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(ValidationError(format!("duplicate flow id {}", w[0])));
        }
        let priority_levels = flows.iter().map(|f| f.priority + 1).max().unwrap_or(1);
        let net = RingNetwork {
            nodes,
            flows,
            priority_levels,
        };
        for k in 1..=m {
            let node = NodeId(k);
            let util = net.utilization(node);
            // Tolerate float slop so an exactly fully loaded node passes.
            if util > 1.0 + 1e-9 {
                return Err(ValidationError(format!(
                    "node {k}: aggregate rate exceeds service rate (utilization {util:.6})"
                )));
            }
        }
        Ok(net)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, k: NodeId) -> &Node {
        &self.nodes[k.0 - 1]
    }

    pub fn flows(&self) -> &[Flow] {
        &self.flows
    }

    pub fn flow(&self, f: FlowIdx) -> &Flow {
        &self.flows[f]
    }

    pub fn priority_levels(&self) -> u32 {
        self.priority_levels
    }

    /// `l (+) k`: the k-th successor of `l` on the ring.
    pub fn ring_add(&self, l: NodeId, k: usize) -> NodeId {
        let m = self.node_count();
        NodeId((l.0 - 1 + k) % m + 1)
    }

    /// `l (-) k`: the k-th predecessor of `l` on the ring.
    pub fn ring_sub(&self, l: NodeId, k: usize) -> NodeId {
        let m = self.node_count();
        let k = k % m;
        NodeId((l.0 - 1 + m - k) % m + 1)
    }

    /// Number of ring steps from `from` to `to` (0 when equal).
    pub fn distance(&self, from: NodeId, to: NodeId) -> usize {
        let m = self.node_count();
        (to.0 + m - from.0) % m
    }

    /// The physical nodes crossed by flow `f`, in order.
    pub fn path(&self, f: FlowIdx) -> Vec<NodeId> {
        let flow = &self.flows[f];
        (0..flow.hops).map(|k| self.ring_add(flow.source, k)).collect()
    }

    /// The first `n` nodes crossed by flow `f` (the virtual source is not
    /// part of the returned sequence).
    pub fn subpath(&self, f: FlowIdx, n: usize) -> Result<Vec<NodeId>, ModelError> {
        let flow = &self.flows[f];
        if n < 1 || n > flow.hops {
            return Err(ModelError::InvalidHopCount {
                flow: flow.id.clone(),
                n,
                hops: flow.hops,
            });
        }
        Ok((0..n).map(|k| self.ring_add(flow.source, k)).collect())
    }

    /// Whether flow `f` crosses node `k`.
    pub fn crosses(&self, f: FlowIdx, k: NodeId) -> bool {
        self.distance(self.flows[f].source, k) < self.flows[f].hops
    }

    /// All flows crossing node `k`, ascending by flow index.
    pub fn crossing_flows(&self, k: NodeId) -> Vec<FlowIdx> {
        (0..self.flows.len()).filter(|f| self.crosses(*f, k)).collect()
    }

    /// Aggregate utilization of node `k`.
    pub fn utilization(&self, k: NodeId) -> f64 {
        let sum: f64 = self
            .crossing_flows(k)
            .iter()
            .map(|f| self.flows[*f].rho)
            .sum();
        sum / self.node(k).rate
    }

    /// Largest per-node utilization in the network.
    pub fn max_utilization(&self) -> f64 {
        (1..=self.node_count())
            .map(|k| self.utilization(NodeId(k)))
            .fold(0.0, f64::max)
    }

    /// Interference set of flow `f` on its first `n` hops: every other flow
    /// crossing at least one subpath node. With `priority_filter`, restricted
    /// to flows of higher-or-equal priority.
    pub fn interference_set(
        &self,
        f: FlowIdx,
        n: usize,
        priority_filter: bool,
    ) -> Result<Vec<FlowIdx>, ModelError> {
        let subpath = self.subpath(f, n)?;
        let pf = self.flows[f].priority;
        Ok((0..self.flows.len())
            .filter(|i| {
                *i != f
                    && (!priority_filter || self.flows[*i].priority <= pf)
                    && subpath.iter().any(|k| self.crosses(*i, *k))
            })
            .collect())
    }

    /// Priority partition of the flows crossing node `k`, relative to `f`:
    /// `hp` holds the other flows with higher-or-equal priority, `lp` the
    /// flows with strictly lower priority.
    pub fn hp_lp_sets(&self, f: FlowIdx, k: NodeId) -> (Vec<FlowIdx>, Vec<FlowIdx>) {
        let pf = self.flows[f].priority;
        let crossing = self.crossing_flows(k);
        let hp = crossing
            .iter()
            .copied()
            .filter(|i| *i != f && self.flows[*i].priority <= pf)
            .collect();
        let lp = crossing
            .iter()
            .copied()
            .filter(|i| self.flows[*i].priority > pf)
            .collect();
        (hp, lp)
    }

    /// Classifies interferer `i` of flow `f` on `subpath_f(n)` by its
    /// convergence points with `f`:
    ///
    /// - source on the subpath only -> [`InterfererCategory::SourceOnSubpath`]
    /// - crosses `f`'s source from upstream only ->
    ///   [`InterfererCategory::CrossesFlowSource`]
    /// - both -> [`InterfererCategory::Both`]
    ///
    /// Membership of `i.first` is tested against the subpath (not `f`'s full
    /// path); flows sourced at `f`'s own source never count as arriving from
    /// upstream. On a ring these cases are exhaustive for any true
    /// interferer.
    pub fn classify_interferer(
        &self,
        i: FlowIdx,
        f: FlowIdx,
        n: usize,
    ) -> Result<InterfererCategory, ModelError> {
        if !self.interference_set(f, n, false)?.contains(&i) {
            return Err(ModelError::NotAnInterferer {
                interferer: self.flows[i].id.clone(),
                flow: self.flows[f].id.clone(),
                n,
            });
        }
        let i_source = self.flows[i].source;
        let f_source = self.flows[f].source;
        let source_on_subpath = self.distance(f_source, i_source) < n;
        let crosses_f_source = self.crosses(i, f_source) && i_source != f_source;
        Ok(match (source_on_subpath, crosses_f_source) {
            (true, true) => InterfererCategory::Both,
            (true, false) => InterfererCategory::SourceOnSubpath,
            (false, true) => InterfererCategory::CrossesFlowSource,
            (false, false) => unreachable!(
                "an arc intersecting the subpath either starts inside it or covers its start"
            ),
        })
    }
}

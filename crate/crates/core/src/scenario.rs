//! Scenario generation and batch execution.
//!
//! All four evaluation scenarios run on broadcast rings: every node sources
//! the same traffic classes and every flow crosses the whole ring, which is
//! the worst contention pattern a unidirectional ring can produce. Scenario
//! 1 sweeps the burst size at fixed size, scenario 2 the network load at
//! fixed size, scenario 3 the ring size, and scenario 4 the ring size with
//! all three traffic classes under fixed-priority multiplexing.

use crate::baselines::{run_method, MethodTag};
use crate::model::{Flow, Node, NodeId, RingNetwork, ValidationError};
use crate::pmoo::{solve_network, AnalysisError, Policy, SubpathKey};
use crate::report::ReportRow;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error("invalid scenario config: {0}")]
    Config(String),
}

/// One traffic class of the case study.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficClass {
    pub name: &'static str,
    pub payload_bytes: u32,
    pub rate_kbps: u32,
    pub priority: u32,
}

impl TrafficClass {
    /// I/O data: hard real time.
    pub fn hrt() -> TrafficClass {
        TrafficClass {
            name: "HRT",
            payload_bytes: 64,
            rate_kbps: 80,
            priority: 0,
        }
    }

    /// Audio streaming: soft real time.
    pub fn srt() -> TrafficClass {
        TrafficClass {
            name: "SRT",
            payload_bytes: 128,
            rate_kbps: 128,
            priority: 1,
        }
    }

    /// File transfer: non real time.
    pub fn nrt() -> TrafficClass {
        TrafficClass {
            name: "NRT",
            payload_bytes: 1024,
            rate_kbps: 1000,
            priority: 2,
        }
    }

    pub fn all() -> Vec<TrafficClass> {
        vec![TrafficClass::hrt(), TrafficClass::srt(), TrafficClass::nrt()]
    }

    /// Frame size on the wire, bits, including the per-frame overhead.
    pub fn frame_bits(&self, overhead_bytes: u32) -> f64 {
        ((self.payload_bytes + overhead_bytes) * 8) as f64
    }

    pub fn rate_bps(&self) -> f64 {
        self.rate_kbps as f64 * 1000.0
    }
}

pub const DEFAULT_LINK_RATE_BPS: f64 = 1e9;
pub const DEFAULT_NODE_LATENCY_S: f64 = 600e-9;
pub const DEFAULT_OVERHEAD_BYTES: u32 = 38;

/// Sweep definition for one scenario run.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub id: u8,
    pub link_rate_bps: f64,
    pub node_latency_s: f64,
    pub overhead_bytes: u32,
    /// Ring sizes; a singleton for scenarios 1 and 2.
    pub node_counts: Vec<usize>,
    /// Frame sizes swept by scenario 1, bytes on the wire.
    pub burst_sweep_bytes: Vec<u32>,
    /// Loads swept by scenario 2, percent of link rate per node.
    pub load_sweep_pct: Vec<f64>,
    /// Emit one row per flow instead of one representative per class.
    pub all_flows: bool,
}

impl ScenarioConfig {
    /// The standard configuration of scenarios 1-4.
    pub fn standard(id: u8) -> Result<ScenarioConfig, ScenarioError> {
        let base = ScenarioConfig {
            id,
            link_rate_bps: DEFAULT_LINK_RATE_BPS,
            node_latency_s: DEFAULT_NODE_LATENCY_S,
            overhead_bytes: DEFAULT_OVERHEAD_BYTES,
            node_counts: vec![],
            burst_sweep_bytes: vec![],
            load_sweep_pct: vec![],
            all_flows: false,
        };
        let cfg = match id {
            1 => ScenarioConfig {
                node_counts: vec![35],
                burst_sweep_bytes: std::iter::once(166)
                    .chain((2..=15).map(|k| k * 100))
                    .collect(),
                ..base
            },
            2 => ScenarioConfig {
                node_counts: vec![10],
                load_sweep_pct: (1..=10).map(|k| (k * 10) as f64).collect(),
                ..base
            },
            3 | 4 => ScenarioConfig {
                node_counts: (1..=10).map(|k| k * 10).collect(),
                ..base
            },
            _ => return Err(ScenarioError::Config(format!("unknown scenario {id}"))),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn policy(&self) -> Policy {
        if self.id == 4 {
            Policy::FixedPriority
        } else {
            Policy::Arbitrary
        }
    }

    pub fn classes(&self) -> Vec<TrafficClass> {
        if self.id == 4 {
            TrafficClass::all()
        } else {
            vec![TrafficClass::srt()]
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(1..=4).contains(&self.id) {
            return Err(ScenarioError::Config(format!("unknown scenario {}", self.id)));
        }
        let active = match self.id {
            1 => self.burst_sweep_bytes.len(),
            2 => self.load_sweep_pct.len(),
            _ => self.node_counts.len(),
        };
        if active == 0 {
            return Err(ScenarioError::Config("empty sweep".into()));
        }
        if self.node_counts.is_empty() {
            return Err(ScenarioError::Config("no node counts".into()));
        }
        if !strictly_increasing(&self.node_counts)
            || !strictly_increasing(&self.burst_sweep_bytes)
            || !self
                .load_sweep_pct
                .windows(2)
                .all(|w| w[0] < w[1])
        {
            return Err(ScenarioError::Config("sweeps must be strictly increasing".into()));
        }
        Ok(())
    }
}

fn strictly_increasing<T: PartialOrd>(xs: &[T]) -> bool {
    xs.windows(2).all(|w| w[0] < w[1])
}

fn class_flow_id(class: &TrafficClass, node: usize) -> String {
    format!("{}-{:03}", class.name.to_lowercase(), node)
}

/// Broadcast ring with one flow per (node, class), every flow crossing the
/// full ring. Per-flow values: burst and maximum frame both one frame of
/// `payload + overhead` bytes, rate the class rate (or, with
/// `load_override`, every rate scaled uniformly so the worst per-node
/// utilization equals the override).
pub fn build_broadcast_ring(
    m: usize,
    classes: &[TrafficClass],
    overhead_bytes: u32,
    load_override: Option<f64>,
) -> Result<RingNetwork, ScenarioError> {
    build_broadcast_ring_at(
        m,
        classes,
        overhead_bytes,
        load_override,
        DEFAULT_LINK_RATE_BPS,
        DEFAULT_NODE_LATENCY_S,
    )
}

pub fn build_broadcast_ring_at(
    m: usize,
    classes: &[TrafficClass],
    overhead_bytes: u32,
    load_override: Option<f64>,
    link_rate_bps: f64,
    node_latency_s: f64,
) -> Result<RingNetwork, ScenarioError> {
    let specs: Vec<(String, f64, f64, f64, u32)> = classes
        .iter()
        .map(|c| {
            (
                c.name.to_lowercase(),
                c.frame_bits(overhead_bytes),
                c.rate_bps(),
                c.frame_bits(overhead_bytes),
                c.priority,
            )
        })
        .collect();
    broadcast_ring_from_specs(m, &specs, load_override, link_rate_bps, node_latency_s)
}

/// Lower-level broadcast builder used by the sweeps: one entry per class as
/// `(name, sigma_bits, rho_bps, max_frame_bits, priority)`.
fn broadcast_ring_from_specs(
    m: usize,
    specs: &[(String, f64, f64, f64, u32)],
    load_override: Option<f64>,
    link_rate_bps: f64,
    node_latency_s: f64,
) -> Result<RingNetwork, ScenarioError> {
    if m < 2 {
        return Err(AnalysisError::DegenerateRing { m }.into());
    }
    let base_aggregate: f64 = m as f64 * specs.iter().map(|s| s.2).sum::<f64>();
    let scale = match load_override {
        Some(load) => load * link_rate_bps / base_aggregate,
        None => 1.0,
    };
    let nodes = vec![
        Node {
            rate: link_rate_bps,
            latency: node_latency_s,
        };
        m
    ];
    let mut flows = Vec::with_capacity(m * specs.len());
    for node in 1..=m {
        for (name, sigma, rho, frame, priority) in specs {
            flows.push(Flow {
                id: format!("{name}-{node:03}"),
                source: NodeId(node),
                hops: m,
                rho: rho * scale,
                sigma0: *sigma,
                priority: *priority,
                max_frame: *frame,
            });
        }
    }
    Ok(RingNetwork::new(nodes, flows)?)
}

/// One sweep point: the network plus the row metadata it carries.
struct SweepPoint {
    net: RingNetwork,
    nodes: usize,
    load_pct: f64,
}

fn sweep_points(cfg: &ScenarioConfig) -> Result<Vec<SweepPoint>, ScenarioError> {
    let classes = cfg.classes();
    let mut points = Vec::new();
    match cfg.id {
        1 => {
            let m = cfg.node_counts[0];
            for burst in &cfg.burst_sweep_bytes {
                // Scenario 1 sweeps the burst only; the rate stays at the
                // class rate and the swept frame is both the burst and the
                // maximum frame.
                let specs: Vec<(String, f64, f64, f64, u32)> = classes
                    .iter()
                    .map(|c| {
                        (
                            c.name.to_lowercase(),
                            (*burst * 8) as f64,
                            c.rate_bps(),
                            (*burst * 8) as f64,
                            c.priority,
                        )
                    })
                    .collect();
                let net = broadcast_ring_from_specs(
                    m,
                    &specs,
                    None,
                    cfg.link_rate_bps,
                    cfg.node_latency_s,
                )?;
                let load_pct = net.max_utilization() * 100.0;
                points.push(SweepPoint {
                    net,
                    nodes: m,
                    load_pct,
                });
            }
        }
        2 => {
            let m = cfg.node_counts[0];
            for load in &cfg.load_sweep_pct {
                let net = build_broadcast_ring_at(
                    m,
                    &classes,
                    cfg.overhead_bytes,
                    Some(load / 100.0),
                    cfg.link_rate_bps,
                    cfg.node_latency_s,
                )?;
                points.push(SweepPoint {
                    net,
                    nodes: m,
                    load_pct: *load,
                });
            }
        }
        3 | 4 => {
            for m in &cfg.node_counts {
                let net = build_broadcast_ring_at(
                    *m,
                    &classes,
                    cfg.overhead_bytes,
                    None,
                    cfg.link_rate_bps,
                    cfg.node_latency_s,
                )?;
                let load_pct = net.max_utilization() * 100.0;
                points.push(SweepPoint {
                    net,
                    nodes: *m,
                    load_pct,
                });
            }
        }
        other => return Err(ScenarioError::Config(format!("unknown scenario {other}"))),
    }
    Ok(points)
}

/// Flows reported at one sweep point: the node-1 flow of each class
/// (broadcast symmetry makes all same-class flows identical), or every flow
/// with `all_flows`.
fn reported_flows(cfg: &ScenarioConfig, net: &RingNetwork) -> Vec<usize> {
    if cfg.all_flows {
        (0..net.flows().len()).collect()
    } else {
        cfg.classes()
            .iter()
            .filter_map(|c| {
                let id = class_flow_id(c, 1);
                net.flows().iter().position(|f| f.id == id)
            })
            .collect()
    }
}

/// Runs every method of the benchmark on every sweep point. Infeasible
/// points produce INF rows; the sweep itself never aborts.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<Vec<ReportRow>, ScenarioError> {
    cfg.validate()?;
    let policy = cfg.policy();
    let mut rows = Vec::new();
    for point in sweep_points(cfg)? {
        let reported = reported_flows(cfg, &point.net);
        for method in MethodTag::ALL {
            let (bounds, det_margin) = if method == MethodTag::RingPmoo {
                match solve_network(&point.net, policy) {
                    Ok(solution) => {
                        let det = solution.det_margin();
                        let map = solution
                            .keys()
                            .map(|key| (key, solution.delay_bound(&point.net, key)))
                            .collect();
                        (Some(map), Some(det))
                    }
                    Err(_) => (None, None),
                }
            } else {
                (run_method(&point.net, policy, method).ok(), None)
            };
            for f in &reported {
                let flow = point.net.flow(*f);
                let key = SubpathKey {
                    flow: *f,
                    n: flow.hops,
                };
                let delay = bounds.as_ref().map(|b| b[&key]);
                rows.push(ReportRow {
                    method,
                    scenario: cfg.id,
                    nodes: point.nodes,
                    load_pct: point.load_pct,
                    burst_bytes: flow.sigma0 / 8.0,
                    traffic_class: class_of_flow(&flow.id),
                    flow_id: flow.id.clone(),
                    hops: flow.hops,
                    delay_bound_s: delay,
                    stable: delay.is_some(),
                    det_margin: if method == MethodTag::RingPmoo {
                        det_margin
                    } else {
                        None
                    },
                });
            }
        }
    }
    Ok(rows)
}

fn class_of_flow(id: &str) -> String {
    id.split('-').next().unwrap_or(id).to_uppercase()
}

/// Locates a method's feasibility frontier on the scenario-2 sweep axis by
/// bisection, refined to `step_pct`. Returns the load (percent) at which the
/// method transitions from feasible to infeasible, or `None` if it never
/// transitions inside `(lo_pct, hi_pct)`.
pub fn scenario2_frontier(
    cfg: &ScenarioConfig,
    method: MethodTag,
    lo_pct: f64,
    hi_pct: f64,
    step_pct: f64,
) -> Result<Option<f64>, ScenarioError> {
    let m = cfg.node_counts[0];
    let classes = cfg.classes();
    let feasible = |load_pct: f64| -> Result<bool, ScenarioError> {
        let net = build_broadcast_ring_at(
            m,
            &classes,
            cfg.overhead_bytes,
            Some(load_pct / 100.0),
            cfg.link_rate_bps,
            cfg.node_latency_s,
        )?;
        Ok(run_method(&net, cfg.policy(), method).is_ok())
    };
    let (mut lo, mut hi) = (lo_pct, hi_pct);
    if !feasible(lo)? || feasible(hi)? {
        return Ok(None);
    }
    while hi - lo > step_pct {
        let mid = 0.5 * (lo + hi);
        if feasible(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::to_csv;

    #[test]
    fn scenario1_starting_burst_matches_srt_frame() {
        // 128-byte SRT payload + 38 bytes of overhead = 166 bytes = 1328 bits.
        let net = build_broadcast_ring(35, &[TrafficClass::srt()], 38, None).unwrap();
        assert_eq!(net.flows().len(), 35);
        for f in net.flows() {
            assert_eq!(f.sigma0, 1328.0);
            assert_eq!(f.hops, 35);
        }
    }

    #[test]
    fn load_override_scales_per_flow_rate() {
        let net = build_broadcast_ring(10, &[TrafficClass::srt()], 38, Some(0.1)).unwrap();
        for f in net.flows() {
            assert!((f.rho - 1e7).abs() < 1e-3);
        }
        assert!((net.max_utilization() - 0.1).abs() < 1e-9);
    }

    #[test]
    fn three_classes_give_three_flows_per_node() {
        let net = build_broadcast_ring(10, &TrafficClass::all(), 38, None).unwrap();
        assert_eq!(net.flows().len(), 30);
        let priorities: Vec<u32> = net.flows().iter().take(3).map(|f| f.priority).collect();
        assert_eq!(priorities, vec![0, 1, 2]);
    }

    #[test]
    fn degenerate_ring_is_rejected() {
        assert!(matches!(
            build_broadcast_ring(1, &[TrafficClass::srt()], 38, None),
            Err(ScenarioError::Analysis(AnalysisError::DegenerateRing { m: 1 }))
        ));
    }

    #[test]
    fn scenario3_emits_forty_rows() {
        let cfg = ScenarioConfig::standard(3).unwrap();
        let rows = run_scenario(&cfg).unwrap();
        assert_eq!(rows.len(), 10 * 4);
    }

    #[test]
    fn scenario_runs_are_deterministic() {
        let cfg = ScenarioConfig::standard(2).unwrap();
        let a = to_csv(&run_scenario(&cfg).unwrap());
        let b = to_csv(&run_scenario(&cfg).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn standard_configs_validate() {
        for id in 1..=4 {
            ScenarioConfig::standard(id).unwrap();
        }
        assert!(ScenarioConfig::standard(5).is_err());
    }

    #[test]
    fn decreasing_sweep_is_rejected() {
        let mut cfg = ScenarioConfig::standard(1).unwrap();
        cfg.burst_sweep_bytes = vec![300, 200];
        assert!(matches!(cfg.validate(), Err(ScenarioError::Config(_))));
    }
}

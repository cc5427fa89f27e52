//! Worst-case timing analysis of unidirectional ring networks with cyclic
//! flow dependencies, based on deterministic network calculus.
//!
//! The central result is a closed-form end-to-end rate-latency service curve
//! for a flow crossing a ring under arbitrary or fixed-priority multiplexing
//! (the Ring-PMOO analysis). Because the latency of that curve depends on the
//! bursts of flows arriving upstream of the flow's source, and those bursts in
//! turn depend on the latencies, the analysis resolves a linear fixed point
//! over all per-subpath latencies and propagated bursts before any delay bound
//! can be stated.
//!
//! Three reference analyses are provided for benchmarking: the Time Stopping
//! method (per-node aggregate delays with assumed-finite entry bursts), the
//! Backlog-based method (per-node backlog clearing times, summed), and an
//! achievable worst-case-delay lower bound (direct interference only).
//!
//! All quantities are carried in SI base units: bits, bits/second, seconds.
//! Unit conversions happen only at the CLI boundary.

pub mod baselines;
pub mod config;
pub mod curves;
pub mod linalg;
pub mod model;
pub mod pmoo;
pub mod report;
pub mod scenario;

/// Relative comparison used throughout the test suites: `|a - b|` within
/// `tol` of `max(|a|, |b|)`, with an absolute fallback for values near zero.
pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    let scale = a.abs().max(b.abs());
    if scale < tol {
        (a - b).abs() <= tol
    } else {
        (a - b).abs() <= tol * scale
    }
}

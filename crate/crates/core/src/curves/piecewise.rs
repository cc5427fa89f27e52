//! Generic piecewise-linear curve carrier.
//!
//! Only the brute-force reference computations in [`super::oracle`] operate
//! on this type; every analysis path uses the closed-form families directly.

use super::{RateLatencyCurve, TokenBucketCurve};

/// One breakpoint: the curve takes `value` at `time` and continues with
/// `slope` until the next breakpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Breakpoint {
    pub time: f64,
    pub value: f64,
    pub slope: f64,
}

/// Non-decreasing piecewise-linear curve given by breakpoints with strictly
/// increasing times starting at 0. Values are the right-continuous closure:
/// for a token bucket the stored value at `t = 0` is `sigma`, which leaves
/// every sup/inf computed over the curve unchanged for the families used
/// here.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearCurve {
    breakpoints: Vec<Breakpoint>,
}

impl PiecewiseLinearCurve {
    pub fn new(breakpoints: Vec<Breakpoint>) -> Self {
        assert!(!breakpoints.is_empty(), "need at least one breakpoint");
        assert_eq!(breakpoints[0].time, 0.0, "first breakpoint must be at t=0");
        for w in breakpoints.windows(2) {
            assert!(w[0].time < w[1].time, "times must be strictly increasing");
            let reached = w[0].value + w[0].slope * (w[1].time - w[0].time);
            assert!(
                w[1].value + 1e-9 >= reached - 1e-9 * reached.abs().max(1.0),
                "curve must be non-decreasing across breakpoints"
            );
        }
        for b in &breakpoints {
            assert!(b.value >= 0.0 && b.slope >= 0.0, "values and slopes must be >= 0");
        }
        PiecewiseLinearCurve { breakpoints }
    }

    pub fn from_token_bucket(alpha: TokenBucketCurve) -> Self {
        PiecewiseLinearCurve::new(vec![Breakpoint {
            time: 0.0,
            value: alpha.sigma,
            slope: alpha.rho,
        }])
    }

    pub fn from_rate_latency(beta: RateLatencyCurve) -> Self {
        if beta.latency == 0.0 {
            PiecewiseLinearCurve::new(vec![Breakpoint {
                time: 0.0,
                value: 0.0,
                slope: beta.rate,
            }])
        } else {
            PiecewiseLinearCurve::new(vec![
                Breakpoint {
                    time: 0.0,
                    value: 0.0,
                    slope: 0.0,
                },
                Breakpoint {
                    time: beta.latency,
                    value: 0.0,
                    slope: beta.rate,
                },
            ])
        }
    }

    pub fn breakpoints(&self) -> &[Breakpoint] {
        &self.breakpoints
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        let idx = match self
            .breakpoints
            .binary_search_by(|b| b.time.partial_cmp(&t).expect("finite times"))
        {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => i - 1,
        };
        let b = self.breakpoints[idx];
        b.value + b.slope * (t - b.time)
    }

    /// Slope of the final segment.
    pub fn tail_slope(&self) -> f64 {
        self.breakpoints.last().expect("non-empty").slope
    }

    /// Smallest `t` with `eval(t) >= target`, or `None` if the curve never
    /// reaches it. Exact on each linear segment.
    pub fn inverse(&self, target: f64) -> Option<f64> {
        if target <= self.eval(0.0) {
            return Some(0.0);
        }
        for (i, b) in self.breakpoints.iter().enumerate() {
            let seg_end = self.breakpoints.get(i + 1).map(|n| n.time);
            let end_value = match seg_end {
                Some(te) => b.value + b.slope * (te - b.time),
                None => f64::INFINITY,
            };
            if target <= end_value {
                if b.slope == 0.0 {
                    // Flat segment at exactly the target value.
                    if target <= b.value {
                        return Some(b.time);
                    }
                    continue;
                }
                return Some(b.time + (target - b.value) / b.slope);
            }
        }
        if self.tail_slope() == 0.0 {
            None
        } else {
            let last = self.breakpoints.last().expect("non-empty");
            Some(last.time + (target - last.value) / last.slope)
        }
    }
}

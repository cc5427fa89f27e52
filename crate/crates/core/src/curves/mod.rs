//! Exact min-plus curve algebra for the two closed-form curve families the
//! analysis relies on: token-bucket arrival curves and rate-latency service
//! curves.
//!
//! Everything here is a pure function over immutable values; all closed forms
//! are exact. A generic piecewise-linear carrier plus sampled brute-force
//! reference computations live in [`piecewise`] and [`oracle`] so property
//! tests can check each closed form against an independent route.
//!
//! Units: bits, bits/second, seconds.

pub mod oracle;
pub mod piecewise;

pub use piecewise::PiecewiseLinearCurve;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CurveError {
    /// The arrival rate meets or exceeds the service rate, so the requested
    /// quantity (deviation, left-over latency) is unbounded.
    #[error("unstable node: arrival rate {rho} vs service rate {rate}")]
    UnstableNode { rho: f64, rate: f64 },
}

/// Token-bucket (leaky-bucket) arrival curve: `alpha(t) = sigma + rho*t` for
/// `t > 0`, and `0` at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TokenBucketCurve {
    /// Maximal burst, bits.
    pub sigma: f64,
    /// Sustained rate, bits/second.
    pub rho: f64,
}

impl TokenBucketCurve {
    pub fn new(sigma: f64, rho: f64) -> Self {
        assert!(sigma >= 0.0 && sigma.is_finite(), "sigma must be >= 0");
        assert!(rho >= 0.0 && rho.is_finite(), "rho must be >= 0");
        TokenBucketCurve { sigma, rho }
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else {
            self.sigma + self.rho * t
        }
    }
}

/// Rate-latency service curve: `beta(t) = rate * max(0, t - latency)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateLatencyCurve {
    /// Service rate, bits/second.
    pub rate: f64,
    /// Latency, seconds.
    pub latency: f64,
}

impl RateLatencyCurve {
    pub fn new(rate: f64, latency: f64) -> Self {
        assert!(rate > 0.0 && rate.is_finite(), "rate must be > 0");
        assert!(latency >= 0.0 && latency.is_finite(), "latency must be >= 0");
        RateLatencyCurve { rate, latency }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.rate * (t - self.latency).max(0.0)
    }
}

/// Min-plus convolution of two rate-latency curves (node concatenation):
/// rates take the min, latencies add.
pub fn convolve_rate_latency(a: RateLatencyCurve, b: RateLatencyCurve) -> RateLatencyCurve {
    RateLatencyCurve::new(a.rate.min(b.rate), a.latency + b.latency)
}

/// Output arrival curve `alpha' = alpha (deconv) beta` of a token-bucket flow
/// crossing a rate-latency server: the rate is preserved and the burst grows
/// by exactly `rho * latency`.
pub fn deconvolve_output_arrival(
    alpha: TokenBucketCurve,
    beta: RateLatencyCurve,
) -> Result<TokenBucketCurve, CurveError> {
    if alpha.rho > beta.rate {
        return Err(CurveError::UnstableNode {
            rho: alpha.rho,
            rate: beta.rate,
        });
    }
    Ok(TokenBucketCurve::new(
        alpha.sigma + alpha.rho * beta.latency,
        alpha.rho,
    ))
}

/// Worst-case delay bound `h(alpha, beta) = sigma/rate + latency`.
pub fn horizontal_deviation(
    alpha: TokenBucketCurve,
    beta: RateLatencyCurve,
) -> Result<f64, CurveError> {
    if alpha.rho > beta.rate {
        return Err(CurveError::UnstableNode {
            rho: alpha.rho,
            rate: beta.rate,
        });
    }
    Ok(alpha.sigma / beta.rate + beta.latency)
}

/// Worst-case backlog bound `v(alpha, beta) = sigma + rho*latency`.
pub fn vertical_deviation(
    alpha: TokenBucketCurve,
    beta: RateLatencyCurve,
) -> Result<f64, CurveError> {
    if alpha.rho > beta.rate {
        return Err(CurveError::UnstableNode {
            rho: alpha.rho,
            rate: beta.rate,
        });
    }
    Ok(alpha.sigma + alpha.rho * beta.latency)
}

/// Left-over service curve under arbitrary multiplexing: the non-decreasing
/// closure `(beta - alpha)^` of a strict rate-latency curve minus a
/// token-bucket interferer. The result is again a strict rate-latency curve
/// with rate `R - rho` and latency `T + (sigma + rho*T)/(R - rho)`.
///
/// `rho = rate` is rejected: the left-over latency would be unbounded.
pub fn leftover_arbitrary(
    beta: RateLatencyCurve,
    alpha: TokenBucketCurve,
) -> Result<RateLatencyCurve, CurveError> {
    if alpha.rho >= beta.rate {
        return Err(CurveError::UnstableNode {
            rho: alpha.rho,
            rate: beta.rate,
        });
    }
    let rate = beta.rate - alpha.rho;
    let latency = beta.latency + (alpha.sigma + alpha.rho * beta.latency) / rate;
    Ok(RateLatencyCurve::new(rate, latency))
}

/// Left-over service curve under non-preemptive fixed-priority multiplexing:
/// subtract every higher-or-equal-priority arrival curve plus one maximum
/// lower-priority frame, then close upward. Rate `R - sum(rho_j)`, latency
/// `T + (sum(sigma_j) + sum(rho_j)*T + L)/(R - sum(rho_j))`.
pub fn leftover_fp_single_node(
    beta: RateLatencyCurve,
    higher: &[TokenBucketCurve],
    max_lower_frame: f64,
) -> Result<RateLatencyCurve, CurveError> {
    assert!(max_lower_frame >= 0.0);
    let rho_sum: f64 = higher.iter().map(|a| a.rho).sum();
    let sigma_sum: f64 = higher.iter().map(|a| a.sigma).sum();
    if rho_sum >= beta.rate {
        return Err(CurveError::UnstableNode {
            rho: rho_sum,
            rate: beta.rate,
        });
    }
    let rate = beta.rate - rho_sum;
    let latency =
        beta.latency + (sigma_sum + rho_sum * beta.latency + max_lower_frame) / rate;
    Ok(RateLatencyCurve::new(rate, latency))
}

/// Blocking by one maximum lower-priority frame only (the highest-priority
/// case): full rate preserved, latency grows by `L/R`.
pub fn leftover_lower_priority(beta: RateLatencyCurve, max_lower_frame: f64) -> RateLatencyCurve {
    assert!(max_lower_frame >= 0.0);
    RateLatencyCurve::new(beta.rate, beta.latency + max_lower_frame / beta.rate)
}

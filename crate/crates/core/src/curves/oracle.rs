//! Sampled brute-force reference computations for property testing.
//!
//! Every function here evaluates the defining formula of a min-plus operation
//! directly over a documented sample set: a uniform grid joined with both
//! curves' breakpoints (and their reflections, where the formula pairs the
//! two curves). For the piecewise-linear inputs used in this crate the
//! optimum of each inner inf/sup lies at one of those candidates, so the
//! sampled value is exact up to floating-point rounding. None of this code
//! shares anything with the closed forms it cross-checks.

use super::piecewise::PiecewiseLinearCurve;

fn push_sorted_dedup(samples: &mut Vec<f64>) {
    samples.retain(|s| s.is_finite() && *s >= 0.0);
    samples.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    samples.dedup();
}

/// Uniform grid over `[0, t_max]` with the given step, joined with `extra`.
fn grid(t_max: f64, step: f64, extra: impl IntoIterator<Item = f64>) -> Vec<f64> {
    assert!(step > 0.0 && t_max >= 0.0);
    let n = (t_max / step).ceil() as usize;
    let mut samples: Vec<f64> = (0..=n).map(|i| (i as f64 * step).min(t_max)).collect();
    samples.extend(extra);
    push_sorted_dedup(&mut samples);
    samples
}

/// Brute-force min-plus convolution `inf_{0<=s<=t} f(s) + g(t-s)`.
pub fn inf_convolution_at(
    f: &PiecewiseLinearCurve,
    g: &PiecewiseLinearCurve,
    t: f64,
    step: f64,
) -> f64 {
    let mut candidates: Vec<f64> = f.breakpoints().iter().map(|b| b.time).collect();
    candidates.extend(g.breakpoints().iter().map(|b| t - b.time));
    candidates.push(t);
    let samples = grid(t, step, candidates);
    samples
        .into_iter()
        .filter(|s| *s <= t)
        .map(|s| f.eval(s) + g.eval(t - s))
        .fold(f64::INFINITY, f64::min)
}

/// Brute-force min-plus deconvolution `sup_{s>=0} f(t+s) - g(s)` over
/// `s in [0, s_max]`.
pub fn deconvolution_at(
    f: &PiecewiseLinearCurve,
    g: &PiecewiseLinearCurve,
    t: f64,
    s_max: f64,
    step: f64,
) -> f64 {
    let mut candidates: Vec<f64> = g.breakpoints().iter().map(|b| b.time).collect();
    candidates.extend(f.breakpoints().iter().map(|b| b.time - t));
    let samples = grid(s_max, step, candidates);
    samples
        .into_iter()
        .map(|s| f.eval(t + s) - g.eval(s))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Brute-force maximum horizontal gap between `alpha` and `beta`: for each
/// sampled `t`, the smallest `d >= 0` with `beta(t + d) >= alpha(t)` (exact
/// per segment via the curve inverse), maximised over the sample set.
///
/// Returns `None` when some arrival value is never served (unstable pair).
pub fn horizontal_deviation(
    alpha: &PiecewiseLinearCurve,
    beta: &PiecewiseLinearCurve,
    t_max: f64,
    step: f64,
) -> Option<f64> {
    let candidates: Vec<f64> = alpha
        .breakpoints()
        .iter()
        .chain(beta.breakpoints().iter())
        .map(|b| b.time)
        .collect();
    let samples = grid(t_max, step, candidates);
    let mut worst: f64 = 0.0;
    for t in samples {
        let demand = alpha.eval(t);
        let served_at = beta.inverse(demand)?;
        worst = worst.max(served_at - t);
    }
    Some(worst.max(0.0))
}

/// Brute-force maximum vertical gap `sup_t alpha(t) - beta(t)` over the
/// sample set.
pub fn vertical_deviation(
    alpha: &PiecewiseLinearCurve,
    beta: &PiecewiseLinearCurve,
    t_max: f64,
    step: f64,
) -> f64 {
    let candidates: Vec<f64> = alpha
        .breakpoints()
        .iter()
        .chain(beta.breakpoints().iter())
        .map(|b| b.time)
        .collect();
    let samples = grid(t_max, step, candidates);
    samples
        .into_iter()
        .map(|t| alpha.eval(t) - beta.eval(t))
        .fold(0.0, f64::max)
}

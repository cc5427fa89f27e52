//! The burst/latency fixed point as a linear system.
//!
//! One latency row and one burst row exist per (flow, hops-crossed) pair:
//!
//! ```text
//! T     = C1 + A1 * sigma      (latency: constants plus upstream bursts)
//! sigma = C2 + A2 * T          (burst growth through the subpath latency)
//! ```
//!
//! which resolves to `T = (Id - A1*A2)^-1 * C3` with `C3 = C1 + A1*C2`. The
//! network is feasible exactly when that matrix is invertible and the
//! resulting latencies and bursts are non-negative.
//!
//! Three routes compute the same fixed point:
//!
//! - [`solve_system`]: Gaussian elimination on the explicit matrices, the
//!   literal transcription above (quadratic storage — intended for small
//!   systems and for auditing the determinant).
//! - [`solve_network`]: eliminates everything except one aggregate upstream
//!   burst total per flow, solves the resulting `I x I` core, and
//!   back-substitutes. Exact (Sylvester's identity: even the determinants
//!   agree), and what every scenario run uses.
//! - [`fixed_point_oracle`]: plain Picard iteration on the two update
//!   equations; shares nothing with the elimination routes and serves as
//!   their independent check.

use super::{
    flow_context, AnalysisError, BurstVector, FlowContext, Policy, SubpathKey,
};
use crate::linalg::{self, DenseMatrix, LinalgError};
use crate::model::RingNetwork;

/// Explicit matrices of the burst/latency system. Row and column `r` both
/// refer to `keys[r]`: the latency vector entry `T^{subpath_f(n)}` and the
/// burst vector entry `sigma_f` after `n` hops.
#[derive(Debug, Clone)]
pub struct MatrixSystem {
    pub keys: Vec<SubpathKey>,
    pub a1: DenseMatrix,
    pub c1: Vec<f64>,
    pub a2: DenseMatrix,
    pub c2: Vec<f64>,
    pub c3: Vec<f64>,
    /// Residual rate `R^{subpath_f(n)}` per row, kept for assembling bounds.
    pub residuals: Vec<f64>,
}

impl MatrixSystem {
    pub fn dim(&self) -> usize {
        self.keys.len()
    }

    pub fn index_of(&self, key: SubpathKey) -> Option<usize> {
        self.keys.iter().position(|k| *k == key)
    }

    /// `Id - A1*A2`, the matrix whose invertibility decides feasibility.
    pub fn system_matrix(&self) -> DenseMatrix {
        let a1a2 = linalg::matmul(&self.a1, &self.a2).expect("square system");
        DenseMatrix::identity(self.dim()).sub(&a1a2)
    }

    pub fn determinant(&self) -> f64 {
        linalg::determinant(&self.system_matrix())
    }
}

/// Solved latencies and bursts for every (flow, n) pair, plus the
/// determinant of the reduced system as a margin-to-singularity indicator.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSolution {
    latencies: Vec<Vec<f64>>,
    residuals: Vec<Vec<f64>>,
    bursts: BurstVector,
    det_margin: f64,
}

impl NetworkSolution {
    /// Latency `T^{subpath_f(n)}` in seconds, `1 <= n <= h_f`.
    pub fn latency(&self, flow: usize, n: usize) -> f64 {
        self.latencies[flow][n - 1]
    }

    /// Residual rate `R^{subpath_f(n)}` in bits/second.
    pub fn residual(&self, flow: usize, n: usize) -> f64 {
        self.residuals[flow][n - 1]
    }

    pub fn bursts(&self) -> &BurstVector {
        &self.bursts
    }

    pub fn det_margin(&self) -> f64 {
        self.det_margin
    }

    /// Delay bound `sigma_f^0 / R^{subpath} + T^{subpath}` for one key.
    pub fn delay_bound(&self, net: &RingNetwork, key: SubpathKey) -> f64 {
        net.flow(key.flow).sigma0 / self.residual(key.flow, key.n)
            + self.latency(key.flow, key.n)
    }

    pub fn keys(&self) -> impl Iterator<Item = SubpathKey> + '_ {
        self.latencies.iter().enumerate().flat_map(|(flow, row)| {
            (1..=row.len()).map(move |n| SubpathKey { flow, n })
        })
    }
}

fn contexts(net: &RingNetwork, policy: Policy) -> Result<Vec<FlowContext>, AnalysisError> {
    (0..net.flows().len())
        .map(|f| flow_context(net, f, policy))
        .collect()
}

/// Builds the explicit matrix system. Storage is quadratic in the number of
/// (flow, n) pairs; use [`solve_network`] for anything big.
pub fn build_matrix_system(
    net: &RingNetwork,
    policy: Policy,
) -> Result<MatrixSystem, AnalysisError> {
    let ctxs = contexts(net, policy)?;
    let mut keys = Vec::new();
    for (f, flow) in net.flows().iter().enumerate() {
        for n in 1..=flow.hops {
            keys.push(SubpathKey { flow: f, n });
        }
    }
    let dim = keys.len();
    let index = |flow: usize, n: usize| -> usize {
        keys.iter()
            .position(|k| k.flow == flow && k.n == n)
            .expect("key in range")
    };

    let mut a1 = DenseMatrix::zeros(dim.max(1), dim.max(1));
    let mut a2 = DenseMatrix::zeros(dim.max(1), dim.max(1));
    let mut c1 = vec![0.0; dim];
    let mut c2 = vec![0.0; dim];
    let mut residuals = vec![0.0; dim];
    for (row, key) in keys.iter().enumerate() {
        let ctx = &ctxs[key.flow];
        let r = ctx.residual[key.n - 1];
        residuals[row] = r;
        c1[row] = ctx.constant[key.n - 1];
        for (i, m) in &ctx.variable {
            if *m == 0 {
                // Degenerate upstream entry: the initial burst is a constant.
                c1[row] += net.flow(*i).sigma0 / r;
            } else {
                let col = index(*i, *m);
                a1.set(row, col, a1.get(row, col) + 1.0 / r);
            }
        }
        a2.set(row, row, net.flow(key.flow).rho);
        c2[row] = net.flow(key.flow).sigma0;
    }
    let c3: Vec<f64> = {
        let a1c2 = a1.mul_vec(&c2);
        c1.iter().zip(a1c2).map(|(c, v)| c + v).collect()
    };
    Ok(MatrixSystem {
        keys,
        a1,
        c1,
        a2,
        c2,
        c3,
        residuals,
    })
}

fn check_non_negative(values: impl IntoIterator<Item = f64>) -> Result<(), AnalysisError> {
    for v in values {
        if !v.is_finite() {
            return Err(AnalysisError::Diverged);
        }
        if v < 0.0 {
            return Err(AnalysisError::NegativeSolution);
        }
    }
    Ok(())
}

/// Solves the explicit system: `T = (Id - A1*A2)^-1 * C3`, then
/// `sigma = C2 + A2*T`.
pub fn solve_system(
    net: &RingNetwork,
    sys: &MatrixSystem,
) -> Result<NetworkSolution, AnalysisError> {
    let matrix = sys.system_matrix();
    let det = linalg::determinant(&matrix);
    let t = match linalg::solve(&matrix, &sys.c3) {
        Ok(t) => t,
        Err(LinalgError::SingularMatrix { .. }) => return Err(AnalysisError::SingularMatrix),
        Err(LinalgError::DimensionMismatch(m)) => unreachable!("square by construction: {m}"),
    };
    let sigma: Vec<f64> = sys
        .a2
        .mul_vec(&t)
        .iter()
        .zip(&sys.c2)
        .map(|(v, c)| v + c)
        .collect();
    check_non_negative(t.iter().copied())?;
    check_non_negative(sigma.iter().copied())?;

    let mut latencies: Vec<Vec<f64>> = net.flows().iter().map(|f| vec![0.0; f.hops]).collect();
    let mut residuals = latencies.clone();
    let mut bursts = BurstVector::initial(net);
    for (row, key) in sys.keys.iter().enumerate() {
        latencies[key.flow][key.n - 1] = t[row];
        residuals[key.flow][key.n - 1] = sys.residuals[row];
        bursts.set(key.flow, key.n, sigma[row]);
    }
    Ok(NetworkSolution {
        latencies,
        residuals,
        bursts,
        det_margin: det,
    })
}

/// Production solver: resolves the fixed point through the per-flow
/// aggregate `W_f`, the total upstream burst arriving at `f`'s source.
/// Writing the latency rows as `T(f,n) = C1(f,n) + W_f / R(f,n)` and
/// substituting the burst rows turns the whole system into `I` equations in
/// the `W_f` alone; everything else follows by direct evaluation.
pub fn solve_network(
    net: &RingNetwork,
    policy: Policy,
) -> Result<NetworkSolution, AnalysisError> {
    let ctxs = contexts(net, policy)?;
    let flows = net.flows().len();

    // W_f = sum over upstream entries (i, m) of
    //       sigma_i^0 + rho_i * (C1(i, m) + W_i / R(i, m)),
    // with the degenerate (i, 0) entries contributing their constant burst.
    let dim = flows.max(1);
    let mut matrix = DenseMatrix::identity(dim);
    let mut rhs = vec![0.0; dim];
    for (f, ctx) in ctxs.iter().enumerate() {
        for (i, m) in &ctx.variable {
            if *m == 0 {
                rhs[f] += net.flow(*i).sigma0;
                continue;
            }
            let ctx_i = &ctxs[*i];
            rhs[f] += net.flow(*i).sigma0 + net.flow(*i).rho * ctx_i.constant[*m - 1];
            let coeff = net.flow(*i).rho / ctx_i.residual[*m - 1];
            matrix.set(f, *i, matrix.get(f, *i) - coeff);
        }
    }
    let det = linalg::determinant(&matrix);
    let w = match linalg::solve(&matrix, &rhs) {
        Ok(w) => w,
        Err(LinalgError::SingularMatrix { .. }) => return Err(AnalysisError::SingularMatrix),
        Err(LinalgError::DimensionMismatch(m)) => unreachable!("square by construction: {m}"),
    };
    check_non_negative(w.iter().copied())?;

    let mut latencies: Vec<Vec<f64>> = Vec::with_capacity(flows);
    let mut bursts = BurstVector::initial(net);
    for (f, ctx) in ctxs.iter().enumerate() {
        let mut row = Vec::with_capacity(ctx.residual.len());
        for n in 1..=ctx.residual.len() {
            let t = ctx.constant[n - 1] + w[f] / ctx.residual[n - 1];
            row.push(t);
            bursts.set(f, n, net.flow(f).sigma0 + net.flow(f).rho * t);
        }
        latencies.push(row);
    }
    for row in &latencies {
        check_non_negative(row.iter().copied())?;
    }
    Ok(NetworkSolution {
        latencies,
        residuals: ctxs.into_iter().map(|c| c.residual).collect(),
        bursts,
        det_margin: det,
    })
}

const PICARD_MAX_ITERATIONS: usize = 100_000;
const PICARD_TOLERANCE: f64 = 1e-12;
const PICARD_DIVERGENCE: f64 = 1e18;

/// Independent reference solver: Picard iteration of the two update
/// equations. Starts from `sigma = sigma^0` everywhere, alternates a latency
/// update with a burst update until the largest relative change drops below
/// 1e-12, and reports divergence once any value grows past 1e18 (or the
/// iteration budget runs out).
pub fn fixed_point_oracle(
    net: &RingNetwork,
    policy: Policy,
) -> Result<NetworkSolution, AnalysisError> {
    let ctxs = contexts(net, policy)?;
    let mut bursts = BurstVector::initial(net);
    let mut latencies: Vec<Vec<f64>> = net.flows().iter().map(|f| vec![0.0; f.hops]).collect();

    for _ in 0..PICARD_MAX_ITERATIONS {
        let mut max_change = 0.0f64;
        for (f, ctx) in ctxs.iter().enumerate() {
            let upstream: f64 = ctx
                .variable
                .iter()
                .map(|(i, m)| bursts.get(*i, *m))
                .sum();
            for n in 1..=ctx.residual.len() {
                let t = ctx.constant[n - 1] + upstream / ctx.residual[n - 1];
                let prev = latencies[f][n - 1];
                let scale = t.abs().max(prev.abs()).max(1e-300);
                max_change = max_change.max((t - prev).abs() / scale);
                latencies[f][n - 1] = t;
            }
        }
        for (f, ctx) in ctxs.iter().enumerate() {
            for n in 1..=ctx.residual.len() {
                let s = net.flow(f).sigma0 + net.flow(f).rho * latencies[f][n - 1];
                if s > PICARD_DIVERGENCE {
                    return Err(AnalysisError::Diverged);
                }
                let prev = bursts.get(f, n);
                let scale = s.abs().max(prev.abs()).max(1e-300);
                max_change = max_change.max((s - prev).abs() / scale);
                bursts.set(f, n, s);
            }
        }
        if max_change < PICARD_TOLERANCE {
            return Ok(NetworkSolution {
                latencies,
                residuals: ctxs.into_iter().map(|c| c.residual).collect(),
                bursts,
                det_margin: f64::NAN,
            });
        }
    }
    Err(AnalysisError::Diverged)
}

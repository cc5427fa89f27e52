//! Small dense linear algebra: matrix product, determinant, and linear-system
//! solving by Gaussian elimination with partial pivoting.
//!
//! System sizes here are tiny (at most a few hundred unknowns), so a
//! hand-rolled pivoted elimination is plenty and keeps the crate free of
//! numeric dependencies.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    /// The matrix is singular (or numerically indistinguishable from
    /// singular). For the analysis systems built on top of this module a
    /// singular matrix signals an infeasible network: the burst/latency fixed
    /// point has no solution and delays are unbounded.
    #[error("singular matrix (|det| = {det:.3e} below threshold {threshold:.3e})")]
    SingularMatrix { det: f64, threshold: f64 },
}

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be >= 1");
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        assert!(!rows.is_empty() && !rows[0].is_empty());
        let cols = rows[0].len();
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        DenseMatrix {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    /// Largest row infinity-norm, used to scale the singularity test.
    pub fn max_row_inf_norm(&self) -> f64 {
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self.get(r, c).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `self - other`, entrywise.
    pub fn sub(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a -= b;
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self.get(r, c) * v[c]).sum())
            .collect()
    }
}

pub fn matmul(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
    if a.cols != b.rows {
        return Err(LinalgError::DimensionMismatch(format!(
            "{}x{} * {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let mut out = DenseMatrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        for k in 0..a.cols {
            let aik = a.get(i, k);
            if aik == 0.0 {
                continue;
            }
            for j in 0..b.cols {
                out.set(i, j, out.get(i, j) + aik * b.get(k, j));
            }
        }
    }
    Ok(out)
}

/// Determinant via pivoted elimination: product of pivots with sign tracking.
/// Singular inputs yield 0.0-class values rather than an error.
pub fn determinant(a: &DenseMatrix) -> f64 {
    assert_eq!(a.rows, a.cols, "determinant requires a square matrix");
    let n = a.rows;
    let mut m = a.clone();
    let mut det = 1.0;
    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_abs = m.get(col, col).abs();
        for r in col + 1..n {
            let v = m.get(r, col).abs();
            if v > pivot_abs {
                pivot_row = r;
                pivot_abs = v;
            }
        }
        if pivot_abs == 0.0 {
            return 0.0;
        }
        if pivot_row != col {
            for c in 0..n {
                let tmp = m.get(col, c);
                m.set(col, c, m.get(pivot_row, c));
                m.set(pivot_row, c, tmp);
            }
            det = -det;
        }
        let pivot = m.get(col, col);
        det *= pivot;
        for r in col + 1..n {
            let factor = m.get(r, col) / pivot;
            if factor == 0.0 {
                continue;
            }
            for c in col..n {
                m.set(r, c, m.get(r, c) - factor * m.get(col, c));
            }
        }
    }
    det
}

/// LU factorization with partial pivoting, factors packed in place (unit
/// lower triangle below the diagonal, U on and above it).
struct LuFactors {
    lu: DenseMatrix,
    perm: Vec<usize>,
}

/// Pivot threshold: any pivot smaller than `1e-12` times the matrix scale is
/// treated as a rank deficiency. The analysis systems built on this module
/// reach an exactly singular matrix at their stability boundary, and this
/// test flags it without misclassifying merely ill-conditioned instances
/// nearby.
fn lu_factor(a: &DenseMatrix) -> Result<LuFactors, LinalgError> {
    let n = a.rows;
    let norm = a.max_row_inf_norm();
    let threshold = 1e-12 * norm;
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_abs = lu.get(col, col).abs();
        for r in col + 1..n {
            let v = lu.get(r, col).abs();
            if v > pivot_abs {
                pivot_row = r;
                pivot_abs = v;
            }
        }
        if pivot_abs <= threshold {
            return Err(LinalgError::SingularMatrix {
                det: pivot_abs,
                threshold,
            });
        }
        if pivot_row != col {
            for c in 0..n {
                let tmp = lu.get(col, c);
                lu.set(col, c, lu.get(pivot_row, c));
                lu.set(pivot_row, c, tmp);
            }
            perm.swap(col, pivot_row);
        }
        let pivot = lu.get(col, col);
        for r in col + 1..n {
            let factor = lu.get(r, col) / pivot;
            lu.set(r, col, factor);
            if factor == 0.0 {
                continue;
            }
            for c in col + 1..n {
                lu.set(r, c, lu.get(r, c) - factor * lu.get(col, c));
            }
        }
    }
    Ok(LuFactors { lu, perm })
}

fn lu_substitute(f: &LuFactors, rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    let mut x: Vec<f64> = f.perm.iter().map(|p| rhs[*p]).collect();
    for r in 1..n {
        for c in 0..r {
            x[r] -= f.lu.get(r, c) * x[c];
        }
    }
    for r in (0..n).rev() {
        for c in r + 1..n {
            x[r] -= f.lu.get(r, c) * x[c];
        }
        x[r] /= f.lu.get(r, r);
    }
    x
}

/// Solves `a * x = rhs` by Gaussian elimination with partial pivoting plus
/// one step of iterative refinement, keeping the residual
/// `||a*x - rhs||_inf <= 1e-9 * ||rhs||_inf` even close to the stability
/// boundary (checked on every call in debug builds).
pub fn solve(a: &DenseMatrix, rhs: &[f64]) -> Result<Vec<f64>, LinalgError> {
    if a.rows != a.cols {
        return Err(LinalgError::DimensionMismatch(format!(
            "solve requires square matrix, got {}x{}",
            a.rows, a.cols
        )));
    }
    if a.rows != rhs.len() {
        return Err(LinalgError::DimensionMismatch(format!(
            "matrix {}x{} vs rhs length {}",
            a.rows,
            a.cols,
            rhs.len()
        )));
    }
    let factors = lu_factor(a)?;
    let mut x = lu_substitute(&factors, rhs);
    let residual: Vec<f64> = a
        .mul_vec(&x)
        .iter()
        .zip(rhs)
        .map(|(ax, r)| r - ax)
        .collect();
    let correction = lu_substitute(&factors, &residual);
    for (xi, dx) in x.iter_mut().zip(correction) {
        *xi += dx;
    }

    #[cfg(debug_assertions)]
    {
        let residual = a
            .mul_vec(&x)
            .iter()
            .zip(rhs)
            .map(|(ax, r)| (ax - r).abs())
            .fold(0.0, f64::max);
        let rhs_norm = rhs.iter().map(|v| v.abs()).fold(0.0, f64::max);
        debug_assert!(
            residual <= 1e-9 * rhs_norm.max(1e-300),
            "solve residual {residual:e} exceeds 1e-9 * {rhs_norm:e}"
        );
    }

    Ok(x)
}

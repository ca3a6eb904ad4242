//! Symmetric factorizations used for definiteness checks and direct solves.

use super::CsrMatrix;
use crate::error::{BuraError, Result};

/// `T - shift I = L D L^T` for a symmetric tridiagonal `T`. Solving with it is
/// the Thomas algorithm specialized to the symmetric case.
#[derive(Clone, Debug)]
pub struct TridiagonalLdl {
    /// Pivots `D`.
    pivots: Vec<f64>,
    /// Subdiagonal of unit lower bidiagonal `L`.
    l: Vec<f64>,
}

impl TridiagonalLdl {
    /// `diag` has length `n`, `off` length `n - 1`.
    pub fn factor(diag: &[f64], off: &[f64], shift: f64) -> Result<Self> {
        let n = diag.len();
        let mut pivots = Vec::with_capacity(n);
        let mut l = Vec::with_capacity(n.saturating_sub(1));
        for i in 0..n {
            let mut d = diag[i] - shift;
            if i > 0 {
                let e = off[i - 1];
                let li = e / pivots[i - 1];
                d -= li * e;
                l.push(li);
            }
            if !(d > 0.0) {
                return Err(BuraError::NotPositiveDefinite { pivot: i, value: d });
            }
            pivots.push(d);
        }
        Ok(Self { pivots, l })
    }

    pub fn from_matrix(a: &CsrMatrix, shift: f64) -> Result<Self> {
        let (diag, off) = tridiagonal_bands(a);
        Self::factor(&diag, &off, shift)
    }

    pub fn n(&self) -> usize {
        self.pivots.len()
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.pivots.len();
        for i in 1..n {
            x[i] -= self.l[i - 1] * x[i - 1];
        }
        for i in 0..n {
            x[i] /= self.pivots[i];
        }
        for i in (0..n.saturating_sub(1)).rev() {
            x[i] -= self.l[i] * x[i + 1];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Diagonal and subdiagonal of a tridiagonal matrix.
pub fn tridiagonal_bands(a: &CsrMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = a.n();
    let diag = a.diagonal();
    let off = (1..n).map(|i| a.get(i, i - 1)).collect();
    (diag, off)
}

/// Number of eigenvalues of the symmetric tridiagonal matrix strictly below
/// `x` (Sylvester inertia of `T - x I`).
pub fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let tiny = f64::MIN_POSITIVE.sqrt();
    let mut count = 0;
    let mut d = 1.0;
    for i in 0..diag.len() {
        let e2 = if i > 0 { off[i - 1] * off[i - 1] } else { 0.0 };
        d = diag[i] - x - if i > 0 { e2 / d } else { 0.0 };
        if d == 0.0 {
            d = -tiny;
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// Upper end of a bisection bracket for the largest eigenvalue of a symmetric
/// tridiagonal matrix: every eigenvalue is below the returned value.
pub fn tridiagonal_max_eigenvalue(diag: &[f64], off: &[f64]) -> f64 {
    let n = diag.len();
    let r = |i: usize| {
        let left = if i > 0 { off[i - 1].abs() } else { 0.0 };
        let right = if i + 1 < n { off[i].abs() } else { 0.0 };
        left + right
    };
    let mut lo = (0..n).map(|i| diag[i] - r(i)).fold(f64::INFINITY, f64::min);
    let mut hi = (0..n).map(|i| diag[i] + r(i)).fold(f64::NEG_INFINITY, f64::max);
    let width = hi.abs().max(lo.abs()).max(f64::MIN_POSITIVE);
    hi += 2.0 * f64::EPSILON * width;
    lo -= 2.0 * f64::EPSILON * width;
    // invariant: sturm_count(lo) < n, sturm_count(hi) == n
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 2.0 * f64::EPSILON * hi.abs() {
            break;
        }
        if sturm_count(diag, off, mid) == n {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Row-oriented envelope (profile) Cholesky factorization `A = L L^T`.
#[derive(Clone, Debug)]
pub struct EnvelopeCholesky {
    first: Vec<usize>,
    /// Row `i` of `L` from column `first[i]` through the diagonal.
    rows: Vec<Vec<f64>>,
}

impl EnvelopeCholesky {
    pub fn factor(a: &CsrMatrix, shift: f64) -> Result<Self> {
        let n = a.n();
        let first = a.row_first_col();
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
        for i in 0..n {
            let fi = first[i];
            let mut row = vec![0.0; i - fi + 1];
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if j <= i {
                    row[j - fi] = v;
                }
            }
            row[i - fi] -= shift;
            for j in fi..i {
                let fj = first[j];
                let lo = fi.max(fj);
                let rj = &rows[j];
                let mut s = row[j - fi];
                for k in lo..j {
                    s -= row[k - fi] * rj[k - fj];
                }
                row[j - fi] = s / rj[j - fj];
            }
            let mut d = row[i - fi];
            for k in fi..i {
                d -= row[k - fi] * row[k - fi];
            }
            if !(d > 0.0) {
                return Err(BuraError::NotPositiveDefinite { pivot: i, value: d });
            }
            row[i - fi] = d.sqrt();
            rows.push(row);
        }
        Ok(Self { first, rows })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.rows.len();
        let mut y = b.to_vec();
        for i in 0..n {
            let fi = self.first[i];
            let r = &self.rows[i];
            let mut s = y[i];
            for k in fi..i {
                s -= r[k - fi] * y[k];
            }
            y[i] = s / r[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let r = &self.rows[i];
            y[i] /= r[i - fi];
            let yi = y[i];
            for k in fi..i {
                y[k] -= r[k - fi] * yi;
            }
        }
        y
    }
}

use crate::error::{BuraError, Result};
use crate::par;
use nalgebra::DMatrix;

/// Rows above this count are multiplied in parallel.
const PAR_ROWS: usize = 8192;

/// Square sparse matrix in compressed sparse row form, column indices sorted
/// within each row, no duplicates.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

impl CsrMatrix {
    /// Assembles from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        if n == 0 {
            return Err(BuraError::InvalidDimension("matrix dimension must be positive".into()));
        }
        let mut t: Vec<(usize, usize, f64)> = triplets.to_vec();
        for &(i, j, v) in &t {
            if i >= n || j >= n {
                return Err(BuraError::InvalidDimension(format!("entry ({i}, {j}) outside a {n}x{n} matrix")));
            }
            if !v.is_finite() {
                return Err(BuraError::InvalidDimension(format!("entry ({i}, {j}) is not finite")));
            }
        }
        t.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0usize; n + 1];
        let mut indices = Vec::with_capacity(t.len());
        let mut data: Vec<f64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in t {
            if last == Some((i, j)) {
                *data.last_mut().unwrap() += v;
                continue;
            }
            indices.push(j);
            data.push(v);
            indptr[i + 1] += 1;
            last = Some((i, j));
        }
        for i in 0..n {
            indptr[i + 1] += indptr[i];
        }
        Ok(Self { n, indptr, indices, data })
    }

    pub fn from_dense(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        let mut t = Vec::new();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(BuraError::DimensionMismatch { expected: n, got: r.len() });
            }
            for (j, &v) in r.iter().enumerate() {
                if v != 0.0 {
                    t.push((i, j, v));
                }
            }
        }
        Self::from_triplets(n, &t)
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::from_triplets(n, &(0..n).map(|i| (i, i, 1.0)).collect::<Vec<_>>())
    }

    /// Symmetric tridiagonal matrix with constant stencil.
    pub fn tridiagonal(n: usize, sub: f64, diag: f64) -> Result<Self> {
        let mut t = Vec::with_capacity(3 * n);
        for i in 0..n {
            if i > 0 {
                t.push((i, i - 1, sub));
            }
            t.push((i, i, diag));
            if i + 1 < n {
                t.push((i, i + 1, sub));
            }
        }
        Self::from_triplets(n, &t)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[r.clone()], &self.data[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map(|p| vals[p]).unwrap_or(0.0)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// Iterates over stored `(row, col, value)` entries in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            let (c, v) = self.row(i);
            c.iter().zip(v).map(move |(&j, &x)| (i, j, x))
        })
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let row = |i: usize| {
            let (c, v) = self.row(i);
            c.iter().zip(v).map(|(&j, &a)| a * x[j]).sum::<f64>()
        };
        par::map_range_if(self.n >= PAR_ROWS, self.n, row)
    }

    /// `y = (A - shift I) x`.
    pub fn shifted_matvec(&self, shift: f64, x: &[f64]) -> Vec<f64> {
        let mut y = self.matvec(x);
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi -= shift * xi;
        }
        y
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for v in &mut out.data {
            *v *= s;
        }
        out
    }

    /// First `(i, j)` with `a_ij != a_ji`, if any.
    pub fn asymmetry(&self) -> Option<(usize, usize)> {
        self.triplets().find(|&(i, j, v)| self.get(j, i) != v).map(|(i, j, _)| (i, j))
    }

    /// True when no entry lies off the three central diagonals.
    pub fn is_tridiagonal(&self) -> bool {
        self.triplets().all(|(i, j, _)| i.abs_diff(j) <= 1)
    }

    /// Largest absolute row sum, an upper bound on the spectral radius.
    pub fn gershgorin_bound(&self) -> f64 {
        (0..self.n).map(|i| self.row(i).1.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (i, j, v) in self.triplets() {
            m[(i, j)] = v;
        }
        m
    }

    /// Lower half-bandwidth of each row: column index of the first stored
    /// entry at or left of the diagonal.
    pub(crate) fn row_first_col(&self) -> Vec<usize> {
        (0..self.n).map(|i| self.row(i).0.first().map_or(i, |&j| j.min(i))).collect()
    }
}

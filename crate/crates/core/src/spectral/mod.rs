//! Reference fractional powers through the eigendecomposition `A = W D W^T`,
//! and energy-norm error reports.

use crate::error::{BuraError, Result};
use crate::matrix::{CsrMatrix, NormalizedMatrix};
use crate::par;
use crate::rational::PartialFractionForm;
use crate::solver::{apply_bura_inverse, SolverConfig};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

/// Largest matrix handed to the dense symmetric eigensolver.
pub const DENSE_EIGEN_CAP: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenSource {
    AnalyticLaplacian,
    DenseSolver,
}

#[derive(Clone, Debug)]
enum Basis {
    /// `psi_i(j) = sqrt(2/(N+1)) sin(i j pi/(N+1))`, from a table of
    /// `sin(l pi/(N+1))`, `l = 0 .. 2(N+1)`.
    Sine { table: Vec<f64>, norm: f64 },
    Dense(DMatrix<f64>),
}

/// Eigenvalues in increasing order with orthonormal eigenvectors.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub source: EigenSource,
    basis: Basis,
}

impl EigenDecomposition {
    /// Closed-form eigenpairs when `a` is the model Laplacian, the dense
    /// solver otherwise.
    pub fn of(a: &NormalizedMatrix) -> Result<Self> {
        match a.laplacian_size() {
            Some(n) => Ok(Self::analytic_laplacian(n)),
            None => Self::dense(a.csr()),
        }
    }

    /// `Lambda_i = sin^2(i pi / (2(N+1)))`, `i = 1..N`.
    pub fn analytic_laplacian(n: usize) -> Self {
        let m = n + 1;
        let table: Vec<f64> =
            (0..2 * m).map(|l| (std::f64::consts::PI * l as f64 / m as f64).sin()).collect();
        let eigenvalues = (1..=n)
            .map(|i| {
                let s = (std::f64::consts::PI * i as f64 / (2 * m) as f64).sin();
                s * s
            })
            .collect();
        Self {
            eigenvalues,
            source: EigenSource::AnalyticLaplacian,
            basis: Basis::Sine { table, norm: (2.0 / m as f64).sqrt() },
        }
    }

    pub fn dense(a: &CsrMatrix) -> Result<Self> {
        let n = a.n();
        if n > DENSE_EIGEN_CAP {
            return Err(BuraError::DimensionTooLarge { n, cap: DENSE_EIGEN_CAP });
        }
        let eig = a.to_dense().symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
        Ok(Self { eigenvalues, source: EigenSource::DenseSolver, basis: Basis::Dense(vectors) })
    }

    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Entry `j` of eigenvector `i` (both 0-based).
    #[inline]
    pub fn vector_entry(&self, i: usize, j: usize) -> f64 {
        match &self.basis {
            Basis::Sine { table, norm } => norm * table[((i + 1) * (j + 1)) % table.len()],
            Basis::Dense(w) => w[(j, i)],
        }
    }

    pub fn eigenvector(&self, i: usize) -> Vec<f64> {
        (0..self.n()).map(|j| self.vector_entry(i, j)).collect()
    }

    /// Spectral coefficients `W^T v`.
    pub fn forward(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n();
        par::map_range(n, |i| (0..n).map(|j| self.vector_entry(i, j) * v[j]).sum())
    }

    /// Synthesis `W c`.
    pub fn synthesize(&self, c: &[f64]) -> Vec<f64> {
        let n = self.n();
        par::map_range(n, |j| (0..n).map(|i| self.vector_entry(i, j) * c[i]).sum())
    }

    /// `g(A) v`.
    pub fn apply_fn<G: Fn(f64) -> f64>(&self, g: G, v: &[f64]) -> Vec<f64> {
        let mut c = self.forward(v);
        for (ci, &l) in c.iter_mut().zip(&self.eigenvalues) {
            *ci *= g(l);
        }
        self.synthesize(&c)
    }

    /// `A^-alpha v` (any real `alpha`).
    pub fn frac_apply(&self, alpha: f64, v: &[f64]) -> Vec<f64> {
        self.apply_fn(|l| l.powf(-alpha), v)
    }

    /// `sqrt(sum Lambda_i^gamma c_i^2)` from spectral coefficients.
    pub fn energy_norm_coeffs(&self, gamma: f64, c: &[f64]) -> f64 {
        self.eigenvalues.iter().zip(c).map(|(&l, &ci)| l.powf(gamma) * ci * ci).sum::<f64>().sqrt()
    }

    pub fn energy_norm(&self, gamma: f64, v: &[f64]) -> f64 {
        self.energy_norm_coeffs(gamma, &self.forward(v))
    }

    /// `max |psi_i^T psi_j - delta_ij|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let n = self.n();
        par::max_range(n, 8, |i| {
            (0..n)
                .map(|j| {
                    let d: f64 = (0..n).map(|l| self.vector_entry(i, l) * self.vector_entry(j, l)).sum();
                    (d - if i == j { 1.0 } else { 0.0 }).abs()
                })
                .fold(0.0, f64::max)
        })
    }

    /// `max_i ||A psi_i - Lambda_i psi_i||_2`.
    pub fn max_residual(&self, a: &CsrMatrix) -> f64 {
        par::max_range(self.n(), 8, |i| {
            let v = self.eigenvector(i);
            let av = a.matvec(&v);
            av.iter().zip(&v).map(|(x, y)| (x - self.eigenvalues[i] * y).powi(2)).sum::<f64>().sqrt()
        })
    }
}

fn check_dim(a: &NormalizedMatrix, v: &[f64]) -> Result<()> {
    if v.len() != a.n() {
        return Err(BuraError::DimensionMismatch { expected: a.n(), got: v.len() });
    }
    Ok(())
}

/// `A^-alpha f` by spectral synthesis.
pub fn exact_frac_apply(a: &NormalizedMatrix, alpha: f64, f: &[f64]) -> Result<Vec<f64>> {
    check_dim(a, f)?;
    Ok(EigenDecomposition::of(a)?.frac_apply(alpha, f))
}

/// `||v||_{A^gamma} = sqrt(<A^gamma v, v>)`.
pub fn energy_norm(a: &NormalizedMatrix, gamma: f64, v: &[f64]) -> Result<f64> {
    check_dim(a, v)?;
    Ok(EigenDecomposition::of(a)?.energy_norm(gamma, v))
}

/// Relative slack allowed when comparing a ratio with its bound.
pub const BOUND_SLACK: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub alpha: f64,
    pub beta: u32,
    pub m: usize,
    pub k: usize,
    pub n: usize,
    pub gamma: f64,
    /// `||u_r - u||_{A^(gamma+beta)}`.
    pub energy_error: f64,
    /// `||f||_{A^(gamma-beta)}`.
    pub rhs_norm: f64,
    pub ratio: f64,
    pub bound_e: f64,
    pub bound_satisfied: bool,
}

/// Caches the eigendecomposition for repeated error reports on one matrix.
pub struct SpectralOracle<'a> {
    pub a: &'a NormalizedMatrix,
    pub eig: EigenDecomposition,
}

impl<'a> SpectralOracle<'a> {
    pub fn new(a: &'a NormalizedMatrix) -> Result<Self> {
        Ok(Self { a, eig: EigenDecomposition::of(a)? })
    }

    /// Error report for an already computed `u_r`.
    pub fn report_for(&self, pf: &PartialFractionForm, alpha: f64, f: &[f64], u_r: &[f64], gamma: f64) -> Result<ErrorReport> {
        check_dim(self.a, f)?;
        check_dim(self.a, u_r)?;
        let beta = pf.params.beta as f64;
        let cf = self.eig.forward(f);
        let cu = self.eig.forward(u_r);
        // spectral coefficients of u_r - A^-alpha f
        let diff: Vec<f64> = cu
            .iter()
            .zip(&cf)
            .zip(&self.eig.eigenvalues)
            .map(|((&u, &c), &l)| u - l.powf(-alpha) * c)
            .collect();
        let energy_error = self.eig.energy_norm_coeffs(gamma + beta, &diff);
        let rhs_norm = self.eig.energy_norm_coeffs(gamma - beta, &cf);
        let ratio = if rhs_norm == 0.0 { 0.0 } else { energy_error / rhs_norm };
        let bound_e = pf.minimax_error;
        Ok(ErrorReport {
            alpha,
            beta: pf.params.beta,
            m: pf.params.m,
            k: pf.params.k,
            n: self.a.n(),
            gamma,
            energy_error,
            rhs_norm,
            ratio,
            bound_e,
            bound_satisfied: ratio <= bound_e * (1.0 + BOUND_SLACK),
        })
    }

    pub fn report(&self, pf: &PartialFractionForm, alpha: f64, f: &[f64], gamma: f64, cfg: &SolverConfig) -> Result<ErrorReport> {
        let u_r = apply_bura_inverse(pf, self.a, f, cfg)?.u_r;
        self.report_for(pf, alpha, f, &u_r, gamma)
    }
}

/// Checks `||u_r - u||_{A^(gamma+beta)} <= E ||f||_{A^(gamma-beta)}` with `u_r`
/// from the solver and `u = A^-alpha f` from the spectral oracle.
pub fn relative_error_report(
    pf: &PartialFractionForm,
    a: &NormalizedMatrix,
    alpha: f64,
    beta: u32,
    f: &[f64],
    gamma: f64,
) -> Result<ErrorReport> {
    if beta != pf.params.beta {
        return Err(BuraError::InvalidParams(format!(
            "beta = {beta} does not match the decomposition (beta = {})",
            pf.params.beta
        )));
    }
    SpectralOracle::new(a)?.report(pf, alpha, f, gamma, &SolverConfig::for_matrix(a))
}

/// Batch CSV: `alpha,beta,m,k,gamma,N,ratio,bound_E,satisfied`.
pub fn write_error_csv(path: &Path, rows: &[ErrorReport]) -> Result<()> {
    let mut s = String::from("alpha,beta,m,k,gamma,N,ratio,bound_E,satisfied\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{:e},{:e},{}",
            r.alpha, r.beta, r.m, r.k, r.gamma, r.n, r.ratio, r.bound_e, r.bound_satisfied
        );
    }
    std::fs::write(path, s)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::laplacian_1d;

    #[test]
    fn analytic_smallest_eigenvalue() {
        let e = EigenDecomposition::analytic_laplacian(3);
        assert!((e.eigenvalues[0] - 0.146446609406726).abs() < 1e-14);
        assert!(e.eigenvalues.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn analytic_pairs_are_orthonormal_eigenpairs() {
        let a = laplacian_1d(40).unwrap();
        let e = EigenDecomposition::of(&a).unwrap();
        assert_eq!(e.source, EigenSource::AnalyticLaplacian);
        assert!(e.orthonormality_defect() < 1e-13);
        assert!(e.max_residual(a.csr()) < 1e-13);
    }

    #[test]
    fn dense_matches_analytic() {
        let a = laplacian_1d(30).unwrap();
        let an = EigenDecomposition::analytic_laplacian(30);
        let de = EigenDecomposition::dense(a.csr()).unwrap();
        for (x, y) in an.eigenvalues.iter().zip(&de.eigenvalues) {
            assert!((x - y).abs() < 1e-13);
        }
        assert!(de.orthonormality_defect() < 1e-12);
        assert!(de.max_residual(a.csr()) < 1e-12);
    }

    #[test]
    fn eigenvector_is_scaled() {
        let a = laplacian_1d(16).unwrap();
        let e = EigenDecomposition::of(&a).unwrap();
        let v = e.eigenvector(4);
        let u = exact_frac_apply(&a, 0.3, &v).unwrap();
        let s = e.eigenvalues[4].powf(-0.3);
        for (x, y) in u.iter().zip(&v) {
            assert!((x - s * y).abs() < 1e-12 * s);
        }
        assert!((energy_norm(&a, 1.0, &v).unwrap() - e.eigenvalues[4].sqrt()).abs() < 1e-14);
    }

    #[test]
    fn zero_rhs_gives_zero_ratio() {
        let a = laplacian_1d(8).unwrap();
        let p = crate::rational::BuraParams::diagonal(0.5, 0).unwrap();
        let pf = PartialFractionForm::from_terms(p, vec![], vec![0.5], vec![], vec![], 0.5).unwrap();
        let rep = relative_error_report(&pf, &a, 0.5, 1, &[0.0; 8], 1.0).unwrap();
        assert_eq!(rep.energy_error, 0.0);
        assert_eq!(rep.ratio, 0.0);
        assert!(rep.bound_satisfied);
        assert!(relative_error_report(&pf, &a, 0.5, 2, &[0.0; 8], 1.0).is_err());
    }

    #[test]
    fn oversized_dense_request() {
        let big = CsrMatrix::identity(DENSE_EIGEN_CAP + 1).unwrap();
        assert!(matches!(EigenDecomposition::dense(&big), Err(BuraError::DimensionTooLarge { .. })));
    }
}

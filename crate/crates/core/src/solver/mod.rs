//! Applying `A^-beta r(A)` through its partial fractions: `beta` solves with
//! `A`, one solve per pole with `A - d_j I`, and a polynomial in `A`.

mod cg;

pub use cg::conjugate_gradient;

use crate::error::{BuraError, Result};
use crate::matrix::{tridiagonal_bands, NormalizedMatrix, StructureTag, TridiagonalLdl};
use crate::par;
use crate::rational::PartialFractionForm;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearSolver {
    ThomasDirect,
    ConjugateGradient,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub linear_solver: LinearSolver,
    pub cg_rel_tol: f64,
    pub cg_max_iter: usize,
    /// Run the independent solves concurrently.
    pub parallel_shifted_solves: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            linear_solver: LinearSolver::ThomasDirect,
            cg_rel_tol: 1e-12,
            cg_max_iter: 20_000,
            parallel_shifted_solves: true,
        }
    }
}

impl SolverConfig {
    /// Thomas for tridiagonal matrices, CG otherwise.
    pub fn for_matrix(a: &NormalizedMatrix) -> Self {
        let linear_solver = match a.matrix.structure() {
            StructureTag::Tridiagonal => LinearSolver::ThomasDirect,
            StructureTag::General => LinearSolver::ConjugateGradient,
        };
        Self { linear_solver, ..Self::default() }
    }

    pub fn cg() -> Self {
        Self { linear_solver: LinearSolver::ConjugateGradient, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cg_rel_tol > 0.0 && self.cg_rel_tol <= 1e-4) {
            return Err(BuraError::InvalidConfig(format!("cg_rel_tol = {} must lie in (0, 1e-4]", self.cg_rel_tol)));
        }
        if self.cg_max_iter == 0 {
            return Err(BuraError::InvalidConfig("cg_max_iter must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveReport {
    pub u_r: Vec<f64>,
    /// Relative residual of each linear solve, in term order (inverse powers,
    /// then poles).
    pub per_term_residuals: Vec<f64>,
    pub wall_time: f64,
    pub terms_evaluated: usize,
    pub linear_solver: LinearSolver,
}

impl SolveReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// A single shifted operator `A - shift I`, factorized when a direct solver
/// is configured.
struct ShiftedSystem<'a> {
    a: &'a NormalizedMatrix,
    shift: f64,
    ldl: Option<TridiagonalLdl>,
}

impl<'a> ShiftedSystem<'a> {
    fn new(a: &'a NormalizedMatrix, shift: f64, cfg: &SolverConfig) -> Result<Self> {
        let ldl = match cfg.linear_solver {
            LinearSolver::ThomasDirect => {
                if a.matrix.structure() != StructureTag::Tridiagonal {
                    return Err(BuraError::InvalidConfig("the Thomas solver needs a tridiagonal matrix".into()));
                }
                let (d, e) = tridiagonal_bands(a.csr());
                Some(TridiagonalLdl::factor(&d, &e, shift).map_err(|_| BuraError::ShiftNotSpd { shift })?)
            }
            LinearSolver::ConjugateGradient => None,
        };
        Ok(Self { a, shift, ldl })
    }

    /// Solution and its relative residual.
    fn solve(&self, b: &[f64], cfg: &SolverConfig) -> Result<(Vec<f64>, f64)> {
        match &self.ldl {
            Some(ldl) => {
                let x = ldl.solve(b);
                let res = relative_residual(self.a, self.shift, &x, b);
                Ok((x, res))
            }
            None => conjugate_gradient(self.a.csr(), self.shift, b, cfg.cg_rel_tol, cfg.cg_max_iter),
        }
    }
}

fn relative_residual(a: &NormalizedMatrix, shift: f64, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.csr().shifted_matvec(shift, x);
    let bn = norm2(b);
    if bn == 0.0 {
        return norm2(&ax);
    }
    let r: Vec<f64> = ax.iter().zip(b).map(|(u, v)| u - v).collect();
    norm2(&r) / bn
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    scale * v.iter().map(|x| (x / scale) * (x / scale)).sum::<f64>().sqrt()
}

/// Solves `(A - d I) x = f`.
pub fn shifted_solve(a: &NormalizedMatrix, d: f64, f: &[f64], cfg: &SolverConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    check_dim(a, f)?;
    Ok(ShiftedSystem::new(a, d, cfg)?.solve(f, cfg)?.0)
}

fn check_dim(a: &NormalizedMatrix, f: &[f64]) -> Result<()> {
    if f.len() != a.n() {
        return Err(BuraError::DimensionMismatch { expected: a.n(), got: f.len() });
    }
    Ok(())
}

/// `A^-beta r(A)` in partial-fraction form, with all factorizations done once
/// so that it can be applied to many vectors.
pub struct BuraOperator<'a> {
    pf: &'a PartialFractionForm,
    a: &'a NormalizedMatrix,
    cfg: SolverConfig,
    plain: ShiftedSystem<'a>,
    shifted: Vec<ShiftedSystem<'a>>,
}

impl<'a> BuraOperator<'a> {
    pub fn new(pf: &'a PartialFractionForm, a: &'a NormalizedMatrix, cfg: &SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let plain = ShiftedSystem::new(a, 0.0, cfg)?;
        let shifted = par::map_range_if(cfg.parallel_shifted_solves, pf.poles.len(), |j| {
            ShiftedSystem::new(a, pf.poles[j], cfg)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        Ok(Self { pf, a, cfg: cfg.clone(), plain, shifted })
    }

    pub fn n(&self) -> usize {
        self.a.n()
    }

    /// Number of linear-algebra terms per application.
    pub fn terms(&self) -> usize {
        self.pf.term_count()
    }

    /// `u_r` and per-solve residuals.
    pub fn apply(&self, f: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.apply_with(f, self.cfg.parallel_shifted_solves)
    }

    pub fn apply_with(&self, f: &[f64], parallel: bool) -> Result<(Vec<f64>, Vec<f64>)> {
        check_dim(self.a, f)?;
        let beta = self.pf.inverse_part.len();
        let k = self.shifted.len();
        // task 0: chained inverse powers; tasks 1..=k: poles
        let tasks = par::map_range_if(parallel, k + 1, |t| -> Result<Vec<(Vec<f64>, f64)>> {
            if t == 0 {
                let mut out = Vec::with_capacity(beta);
                let mut y = f.to_vec();
                for j in 0..beta {
                    let (x, res) = self.plain.solve(&y, &self.cfg)?;
                    out.push((scaled(&x, self.pf.inverse_part[j]), res));
                    y = x;
                }
                Ok(out)
            } else {
                let (x, res) = self.shifted[t - 1].solve(f, &self.cfg)?;
                Ok(vec![(scaled(&x, self.pf.residues[t - 1]), res)])
            }
        });
        let mut terms = Vec::with_capacity(beta + k + 1);
        let mut residuals = Vec::with_capacity(beta + k);
        for t in tasks {
            for (v, r) in t? {
                terms.push(v);
                residuals.push(r);
            }
        }
        if !self.pf.poly_part.is_empty() {
            terms.push(self.poly_apply(f));
        }
        if self.cfg.linear_solver == LinearSolver::ConjugateGradient {
            if let Some(&bad) = residuals.iter().find(|&&r| !(r <= self.cfg.cg_rel_tol)) {
                return Err(BuraError::CgDivergence {
                    iterations: self.cfg.cg_max_iter,
                    residual: bad,
                    tol: self.cfg.cg_rel_tol,
                });
            }
        }
        Ok((pairwise_sum(&terms, self.n()), residuals))
    }

    /// `sum_j b_j A^j f` by Horner's rule.
    fn poly_apply(&self, f: &[f64]) -> Vec<f64> {
        let b = &self.pf.poly_part;
        let mut acc = scaled(f, b[b.len() - 1]);
        for &bj in b.iter().rev().skip(1) {
            acc = self.a.csr().matvec(&acc);
            for (a, fi) in acc.iter_mut().zip(f) {
                *a += bj * fi;
            }
        }
        acc
    }
}

fn scaled(x: &[f64], c: f64) -> Vec<f64> {
    x.iter().map(|v| v * c).collect()
}

/// Elementwise sum of `terms` by recursive halving; the grouping depends only
/// on the number of terms.
fn pairwise_sum(terms: &[Vec<f64>], n: usize) -> Vec<f64> {
    match terms.len() {
        0 => vec![0.0; n],
        1 => terms[0].clone(),
        len => {
            let (l, r) = terms.split_at(len / 2);
            let mut a = pairwise_sum(l, n);
            let b = pairwise_sum(r, n);
            for (x, y) in a.iter_mut().zip(&b) {
                *x += y;
            }
            a
        }
    }
}

/// `u_r = A^-beta r(A) f`.
pub fn apply_bura_inverse(
    pf: &PartialFractionForm,
    a: &NormalizedMatrix,
    f: &[f64],
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    let start = Instant::now();
    let op = BuraOperator::new(pf, a, cfg)?;
    let (u_r, per_term_residuals) = op.apply(f)?;
    Ok(SolveReport {
        u_r,
        per_term_residuals,
        wall_time: start.elapsed().as_secs_f64(),
        terms_evaluated: op.terms(),
        linear_solver: cfg.linear_solver,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonnegativityReport {
    pub min_entry: f64,
    pub max_entry: f64,
    /// `max |M_ij - M_ji| / max |M_ij|`.
    pub symmetry_defect: f64,
    pub nonnegative: bool,
    pub symmetric: bool,
}

/// Default dimension cap for [`verify_doubly_nonnegative`].
pub const DNN_CAP: usize = 1024;

/// Materializes `A^-beta r(A)` column by column and checks entrywise
/// nonnegativity (tolerance `1e-12` of the largest entry) and symmetry.
pub fn verify_doubly_nonnegative(
    pf: &PartialFractionForm,
    a: &NormalizedMatrix,
    n_cap: usize,
) -> Result<NonnegativityReport> {
    verify_doubly_nonnegative_with(pf, a, n_cap, &SolverConfig::for_matrix(a))
}

pub fn verify_doubly_nonnegative_with(
    pf: &PartialFractionForm,
    a: &NormalizedMatrix,
    n_cap: usize,
    cfg: &SolverConfig,
) -> Result<NonnegativityReport> {
    let n = a.n();
    if n > n_cap {
        return Err(BuraError::DimensionTooLarge { n, cap: n_cap });
    }
    let op = BuraOperator::new(pf, a, cfg)?;
    let columns = par::map_range_if(cfg.parallel_shifted_solves, n, |j| {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        op.apply_with(&e, false).map(|(u, _)| u)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut mag = 0.0f64;
    let mut defect = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            let v = columns[j][i];
            min = min.min(v);
            max = max.max(v);
            mag = mag.max(v.abs());
            defect = defect.max((v - columns[i][j]).abs());
        }
    }
    let symmetry_defect = if mag > 0.0 { defect / mag } else { 0.0 };
    Ok(NonnegativityReport {
        min_entry: min,
        max_entry: max,
        symmetry_defect,
        nonnegative: min >= -1e-12 * max.max(0.0),
        symmetric: symmetry_defect <= 1e-12,
    })
}

/// Writes `index,x,value` rows; `x = (i + 1) h` when a mesh width is given.
pub fn write_solution_csv(path: &Path, u: &[f64], h: Option<f64>) -> Result<()> {
    let mut s = String::from("index,x,value\n");
    for (i, v) in u.iter().enumerate() {
        match h {
            Some(h) => {
                let _ = writeln!(s, "{},{:e},{:e}", i, (i + 1) as f64 * h, v);
            }
            None => {
                let _ = writeln!(s, "{},,{:e}", i, v);
            }
        }
    }
    std::fs::write(path, s)?;
    Ok(())
}

//! Sparse symmetric matrices, M-matrix and monotonicity tests, and spectral
//! normalization to `(0, 1]`.

mod csr;
mod factor;
mod io;

pub use csr::CsrMatrix;
pub use factor::{sturm_count, tridiagonal_bands, tridiagonal_max_eigenvalue, EnvelopeCholesky, TridiagonalLdl};
pub use io::{read_matrix_market, write_dense_csv, write_matrix_market};

use crate::error::{BuraError, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Default dimension cap for dense inversion.
pub const DENSE_INVERSE_CAP: usize = 2000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructureTag {
    Tridiagonal,
    General,
}

/// Exactly symmetric sparse matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSpdMatrix {
    csr: CsrMatrix,
    structure: StructureTag,
}

impl SparseSpdMatrix {
    /// Wraps `csr` after checking exact symmetry. Definiteness is checked on
    /// demand by [`SparseSpdMatrix::check_positive_definite`].
    pub fn new(csr: CsrMatrix) -> Result<Self> {
        if let Some((row, col)) = csr.asymmetry() {
            return Err(BuraError::NotSymmetric { row, col });
        }
        let structure = if csr.is_tridiagonal() { StructureTag::Tridiagonal } else { StructureTag::General };
        Ok(Self { csr, structure })
    }

    pub fn csr(&self) -> &CsrMatrix {
        &self.csr
    }

    pub fn n(&self) -> usize {
        self.csr.n()
    }

    pub fn structure(&self) -> StructureTag {
        self.structure
    }

    /// Succeeds when a Cholesky-type factorization of `A - shift I` exists.
    pub fn check_positive_definite_shifted(&self, shift: f64) -> Result<()> {
        match self.structure {
            StructureTag::Tridiagonal => TridiagonalLdl::from_matrix(&self.csr, shift).map(|_| ()),
            StructureTag::General => EnvelopeCholesky::factor(&self.csr, shift).map(|_| ()),
        }
    }

    pub fn check_positive_definite(&self) -> Result<()> {
        self.check_positive_definite_shifted(0.0)
    }

    pub fn is_m_matrix(&self) -> bool {
        is_z_matrix(&self.csr) && self.check_positive_definite().is_ok()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralBoundProof {
    /// Largest absolute row sum.
    Gershgorin,
    /// Largest eigenvalue, computed.
    ExactEigen,
    /// Supplied by the caller without verification.
    UserAsserted,
}

/// Where a normalized matrix came from; the model Laplacian carries closed-form
/// eigenpairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixOrigin {
    Laplacian1d { n: usize },
    General,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationBound {
    Gershgorin,
    Exact,
}

/// `original = scale * matrix`, spectrum of `matrix` inside `(0, 1]`.
#[derive(Clone, Debug)]
pub struct NormalizedMatrix {
    pub matrix: SparseSpdMatrix,
    pub scale: f64,
    pub proof: SpectralBoundProof,
    pub origin: MatrixOrigin,
}

impl NormalizedMatrix {
    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    pub fn csr(&self) -> &CsrMatrix {
        self.matrix.csr()
    }

    /// Grid size when this is the model Laplacian.
    pub fn laplacian_size(&self) -> Option<usize> {
        match self.origin {
            MatrixOrigin::Laplacian1d { n } => Some(n),
            MatrixOrigin::General => None,
        }
    }

    /// The unnormalized matrix `scale * matrix`.
    pub fn rescaled(&self) -> CsrMatrix {
        self.csr().scaled(self.scale)
    }

    /// Wraps an already-normalized matrix whose spectral bound the caller
    /// vouches for. Positive definiteness is still checked.
    pub fn assume_normalized(matrix: SparseSpdMatrix, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(BuraError::InvalidParams(format!("scale {scale} must be positive")));
        }
        matrix.check_positive_definite()?;
        Ok(Self { matrix, scale, proof: SpectralBoundProof::UserAsserted, origin: MatrixOrigin::General })
    }
}

/// Normalized 1D Dirichlet Laplacian `tridiag(-1/4, 1/2, -1/4)` on `N` interior
/// nodes, with `scale = 4 / h^2`, `h = 1/(N+1)`.
pub fn laplacian_1d(n: usize) -> Result<NormalizedMatrix> {
    if n == 0 {
        return Err(BuraError::InvalidDimension("laplacian_1d needs N >= 1".into()));
    }
    let csr = CsrMatrix::tridiagonal(n, -0.25, 0.5)?;
    let h_inv = (n + 1) as f64;
    Ok(NormalizedMatrix {
        matrix: SparseSpdMatrix { csr, structure: StructureTag::Tridiagonal },
        scale: 4.0 * h_inv * h_inv,
        proof: SpectralBoundProof::Gershgorin,
        origin: MatrixOrigin::Laplacian1d { n },
    })
}

/// Divides `a` by an upper bound of its largest eigenvalue.
pub fn normalize(a: &SparseSpdMatrix, bound: NormalizationBound) -> Result<NormalizedMatrix> {
    a.check_positive_definite()?;
    let (scale, proof) = match (bound, a.structure()) {
        (NormalizationBound::Gershgorin, _) => (a.csr().gershgorin_bound(), SpectralBoundProof::Gershgorin),
        (NormalizationBound::Exact, StructureTag::Tridiagonal) => {
            let (d, e) = tridiagonal_bands(a.csr());
            (tridiagonal_max_eigenvalue(&d, &e), SpectralBoundProof::ExactEigen)
        }
        (NormalizationBound::Exact, StructureTag::General) => {
            let n = a.n();
            if n > crate::spectral::DENSE_EIGEN_CAP {
                return Err(BuraError::DimensionTooLarge { n, cap: crate::spectral::DENSE_EIGEN_CAP });
            }
            let ev = a.csr().to_dense().symmetric_eigenvalues();
            let top = ev.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            // round up to cover the eigensolver's backward error
            (top * (1.0 + 8.0 * n as f64 * f64::EPSILON), SpectralBoundProof::ExactEigen)
        }
    };
    Ok(NormalizedMatrix {
        matrix: SparseSpdMatrix { csr: a.csr().scaled(1.0 / scale), structure: a.structure() },
        scale,
        proof,
        origin: MatrixOrigin::General,
    })
}

/// Off-diagonal entries are all `<= 0`.
pub fn is_z_matrix(a: &CsrMatrix) -> bool {
    a.triplets().all(|(i, j, v)| i == j || v <= 0.0)
}

/// Symmetric M-matrix (Stieltjes) test: Z-pattern and positive definiteness.
/// A non-Z input is rejected before symmetry is examined.
pub fn is_m_matrix(a: &CsrMatrix) -> Result<bool> {
    if !is_z_matrix(a) {
        return Ok(false);
    }
    let s = SparseSpdMatrix::new(a.clone())?;
    Ok(s.check_positive_definite().is_ok())
}

/// Dense inverse by LU with partial pivoting.
pub fn dense_inverse(a: &CsrMatrix, cap: usize) -> Result<DMatrix<f64>> {
    if a.n() > cap {
        return Err(BuraError::DimensionTooLarge { n: a.n(), cap });
    }
    let lu = a.to_dense().lu();
    if lu.u().diagonal().iter().any(|&u| u == 0.0 || !u.is_finite()) {
        return Err(BuraError::Singular);
    }
    lu.try_inverse().ok_or(BuraError::Singular)
}

/// `A^-1 >= 0` entrywise, with entries above `-1e-13 max|A^-1|` counted as
/// nonnegative.
pub fn is_monotone_dense(a: &CsrMatrix, cap: usize) -> Result<bool> {
    let inv = dense_inverse(a, cap)?;
    let max = inv.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(inv.iter().all(|&v| v >= -1e-13 * max))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a1() -> CsrMatrix {
        CsrMatrix::from_dense(&[&[-1.0, 3.0], &[2.0, -4.0]]).unwrap()
    }

    #[test]
    fn laplacian_small() {
        let l = laplacian_1d(3).unwrap();
        assert_eq!(l.scale, 64.0);
        assert_eq!(l.csr().get(1, 1), 0.5);
        assert_eq!(l.csr().get(1, 2), -0.25);
        assert!(l.matrix.is_m_matrix());
        assert!(laplacian_1d(0).is_err());
    }

    #[test]
    fn example_matrix_is_monotone_but_not_m() {
        assert!(!is_z_matrix(&a1()));
        assert!(!is_m_matrix(&a1()).unwrap());
        assert!(is_monotone_dense(&a1(), DENSE_INVERSE_CAP).unwrap());
        let inv = dense_inverse(&a1(), 10).unwrap();
        let expected = [[2.0, 1.5], [1.0, 0.5]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((inv[(i, j)] - expected[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn shifted_example_is_not_monotone() {
        let a2 = CsrMatrix::from_dense(&[&[5.0, 3.0], &[2.0, 2.0]]).unwrap();
        assert!(!is_monotone_dense(&a2, DENSE_INVERSE_CAP).unwrap());
        let inv = dense_inverse(&a2, 10).unwrap();
        let expected = [[0.5, -0.75], [-0.5, 1.25]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((inv[(i, j)] - expected[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn asymmetric_z_matrix_errors_on_m_test() {
        let a = CsrMatrix::from_dense(&[&[2.0, -1.0], &[-0.5, 2.0]]).unwrap();
        assert!(matches!(is_m_matrix(&a), Err(BuraError::NotSymmetric { .. })));
    }

    #[test]
    fn singular_and_oversized_inverse() {
        let s = CsrMatrix::from_dense(&[&[1.0, 2.0], &[2.0, 4.0]]).unwrap();
        assert!(matches!(dense_inverse(&s, 10), Err(BuraError::Singular)));
        assert!(matches!(dense_inverse(&s, 1), Err(BuraError::DimensionTooLarge { .. })));
    }

    #[test]
    fn identity_is_everything() {
        let i = CsrMatrix::identity(4).unwrap();
        assert!(is_m_matrix(&i).unwrap());
        assert!(is_monotone_dense(&i, 10).unwrap());
        let n = normalize(&SparseSpdMatrix::new(i).unwrap(), NormalizationBound::Gershgorin).unwrap();
        assert_eq!(n.scale, 1.0);
    }

    #[test]
    fn normalization_scales() {
        let t = SparseSpdMatrix::new(CsrMatrix::tridiagonal(7, -1.0, 2.0).unwrap()).unwrap();
        let g = normalize(&t, NormalizationBound::Gershgorin).unwrap();
        assert_eq!(g.scale, 4.0);
        assert_eq!(g.csr(), laplacian_1d(7).unwrap().csr());

        let two = SparseSpdMatrix::new(CsrMatrix::from_dense(&[&[2.0, -1.0], &[-1.0, 2.0]]).unwrap()).unwrap();
        assert_eq!(normalize(&two, NormalizationBound::Gershgorin).unwrap().scale, 3.0);
        let e = normalize(&two, NormalizationBound::Exact).unwrap();
        assert!(e.scale >= 3.0 && e.scale - 3.0 < 1e-14);
        assert_eq!(e.proof, SpectralBoundProof::ExactEigen);
    }

    #[test]
    fn indefinite_matrix_is_not_normalized() {
        let a = SparseSpdMatrix::new(CsrMatrix::from_dense(&[&[1.0, 2.0], &[2.0, 1.0]]).unwrap()).unwrap();
        assert!(matches!(normalize(&a, NormalizationBound::Gershgorin), Err(BuraError::NotPositiveDefinite { .. })));
    }
}

use super::{CsrMatrix, SparseSpdMatrix};
use crate::error::{BuraError, Result};
use nalgebra::DMatrix;
use std::fmt::Write as _;
use std::path::Path;

/// Reads a real Matrix Market coordinate file. Symmetric storage is expanded;
/// the result must be exactly symmetric.
pub fn read_matrix_market(path: &Path) -> Result<SparseSpdMatrix> {
    let tri = sprs::io::read_matrix_market::<f64, usize, _>(path)
        .map_err(|e| BuraError::MatrixMarket(format!("{}: {e}", path.display())))?;
    if tri.rows() != tri.cols() {
        return Err(BuraError::MatrixMarket(format!("matrix is {}x{}, expected square", tri.rows(), tri.cols())));
    }
    let triplets: Vec<(usize, usize, f64)> = tri
        .row_inds()
        .iter()
        .zip(tri.col_inds())
        .zip(tri.data())
        .map(|((&i, &j), &v)| (i, j, v))
        .collect();
    SparseSpdMatrix::new(CsrMatrix::from_triplets(tri.rows(), &triplets)?)
}

/// Writes the lower triangle in Matrix Market symmetric coordinate format.
/// Values use shortest round-trip formatting.
pub fn write_matrix_market(path: &Path, a: &SparseSpdMatrix) -> Result<()> {
    let csr = a.csr();
    let lower: Vec<_> = csr.triplets().filter(|&(i, j, _)| j <= i).collect();
    let mut s = String::from("%%MatrixMarket matrix coordinate real symmetric\n");
    let _ = writeln!(s, "{} {} {}", csr.n(), csr.n(), lower.len());
    for (i, j, v) in lower {
        let _ = writeln!(s, "{} {} {:e}", i + 1, j + 1, v);
    }
    std::fs::write(path, s)?;
    Ok(())
}

/// Dense matrix as CSV, one row per line.
pub fn write_dense_csv(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut s = String::with_capacity(m.nrows() * m.ncols() * 24);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                s.push(',');
            }
            let _ = write!(s, "{:e}", m[(i, j)]);
        }
        s.push('\n');
    }
    std::fs::write(path, s)?;
    Ok(())
}

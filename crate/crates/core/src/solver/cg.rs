use super::norm2;
use crate::error::{BuraError, Result};
use crate::matrix::CsrMatrix;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Unpreconditioned conjugate gradients for `(A - shift I) x = b`, started
/// from zero. Returns the solution and its final relative residual (the
/// recursively updated one, confirmed by an explicit residual at exit).
///
/// Nonpositive curvature means `A - shift I` is not positive definite.
pub fn conjugate_gradient(
    a: &CsrMatrix,
    shift: f64,
    b: &[f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, f64)> {
    let n = b.len();
    let bnorm = norm2(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((x, 0.0));
    }
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    for it in 0..max_iter {
        let ap = a.shifted_matvec(shift, &p);
        let curv = dot(&p, &ap);
        if !(curv > 0.0) {
            return Err(BuraError::ShiftNotSpd { shift });
        }
        let step = rr / curv;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        let rr_new = dot(&r, &r);
        if rr_new.sqrt() <= rel_tol * bnorm {
            let true_r: Vec<f64> = a.shifted_matvec(shift, &x).iter().zip(b).map(|(u, v)| v - u).collect();
            let res = norm2(&true_r) / bnorm;
            if res <= rel_tol || it + 1 == max_iter {
                return Ok((x, res));
            }
            // drift between recursive and true residual: restart from x
            r = true_r;
            rr = dot(&r, &r);
            p = r.clone();
            continue;
        }
        let ratio = rr_new / rr;
        for i in 0..n {
            p[i] = r[i] + ratio * p[i];
        }
        rr = rr_new;
    }
    let true_r: Vec<f64> = a.shifted_matvec(shift, &x).iter().zip(b).map(|(u, v)| v - u).collect();
    Err(BuraError::CgDivergence { iterations: max_iter, residual: norm2(&true_r) / bnorm, tol: rel_tol })
}

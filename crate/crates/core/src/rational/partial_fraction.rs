//! Partial fractions of `t^-beta r(t)`:
//!
//! ```text
//! t^-beta r(t) = sum_j b_j t^j + sum_{j=1..beta} c0_j / t^j + sum_{j=1..k} c_j / (t - d_j)
//! ```

use super::{BuraParams, RationalApprox};
use crate::error::{BuraError, Result};
use crate::mp::{self, Mp};
use rug::Float;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Coefficients of the decomposition, rounded to double precision.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PartialFractionForm {
    pub params: BuraParams,
    pub minimax_error: f64,
    pub precision_bits: u32,
    /// `b_0 .. b_{m-k-beta}`; empty when `m < k + beta`.
    pub poly_part: Vec<f64>,
    /// `c0_1 .. c0_beta`, coefficients of `t^-1 .. t^-beta`.
    pub inverse_part: Vec<f64>,
    /// `c_1 .. c_k`.
    pub residues: Vec<f64>,
    /// `d_1 .. d_k`, in decreasing order.
    pub poles: Vec<f64>,
    #[serde(skip)]
    pub diagnostics: Option<DecompositionDiagnostics>,
}

/// Byproducts of the decomposition that are not needed to apply it.
#[derive(Clone, Debug, Default)]
pub struct DecompositionDiagnostics {
    /// Real parts of the numerator zeros, decreasing.
    pub zeros: Vec<f64>,
    pub zeros_all_real: bool,
    /// Residues `c*_j` of `r` itself at `d_j`.
    pub r_residues: Vec<f64>,
    /// Largest relative change caused by rounding poles and coefficients to
    /// double.
    pub rounding_error: f64,
}

impl PartialFractionForm {
    /// Builds a decomposition directly from coefficient lists (poles need not
    /// be sorted). Useful for hand-made or imported data.
    pub fn from_terms(
        params: BuraParams,
        poly_part: Vec<f64>,
        inverse_part: Vec<f64>,
        residues: Vec<f64>,
        poles: Vec<f64>,
        minimax_error: f64,
    ) -> Result<Self> {
        if residues.len() != poles.len() {
            return Err(BuraError::DimensionMismatch { expected: poles.len(), got: residues.len() });
        }
        Ok(Self {
            params,
            minimax_error,
            precision_bits: 53,
            poly_part,
            inverse_part,
            residues,
            poles,
            diagnostics: None,
        })
    }

    /// Number of linear-solve terms: `beta` plain powers plus `k` shifts.
    pub fn term_count(&self) -> usize {
        self.inverse_part.len() + self.residues.len() + self.poly_part.len()
    }

    /// Evaluates the decomposition at `t != 0`, i.e. `t^-beta r(t)`.
    pub fn evaluate(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for &b in self.poly_part.iter().rev() {
            acc = acc * t + b;
        }
        let inv = 1.0 / t;
        let mut pw = inv;
        for &c in &self.inverse_part {
            acc += c * pw;
            pw *= inv;
        }
        for (&c, &d) in self.residues.iter().zip(&self.poles) {
            acc += c / (t - d);
        }
        acc
    }

    /// Scalar symbol of the operator `A^-beta r(A)` at eigenvalue `lambda`.
    pub fn symbol(&self, lambda: f64) -> f64 {
        self.evaluate(lambda)
    }

    pub fn to_coefficient_file(&self) -> CoefficientFile {
        CoefficientFile {
            alpha: self.params.alpha,
            beta: self.params.beta,
            m: self.params.m,
            k: self.params.k,
            error: self.minimax_error,
            poles: self.poles.clone(),
            residues: self.residues.clone(),
            c0: self.inverse_part.clone(),
            poly: self.poly_part.clone(),
            precision_bits: self.precision_bits,
        }
    }
}

/// JSON exchange format for decomposition coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientFile {
    pub alpha: f64,
    pub beta: u32,
    pub m: usize,
    pub k: usize,
    #[serde(rename = "E")]
    pub error: f64,
    pub poles: Vec<f64>,
    pub residues: Vec<f64>,
    pub c0: Vec<f64>,
    pub poly: Vec<f64>,
    pub precision_bits: u32,
}

impl CoefficientFile {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn into_form(self) -> Result<PartialFractionForm> {
        let params = BuraParams::new(self.alpha, self.beta, self.m, self.k)?;
        if self.c0.len() != self.beta as usize {
            return Err(BuraError::DimensionMismatch { expected: self.beta as usize, got: self.c0.len() });
        }
        let mut pf =
            PartialFractionForm::from_terms(params, self.poly, self.c0, self.residues, self.poles, self.error)?;
        pf.precision_bits = self.precision_bits;
        Ok(pf)
    }
}

/// Decomposes `t^-beta r(t)` into polynomial, inverse-power and simple-pole
/// parts. Poles are the roots of the denominator, found in the working
/// precision of `r`.
pub fn partial_fractions(r: &RationalApprox) -> Result<PartialFractionForm> {
    let prec = r.precision_bits;
    let beta = r.params.beta as usize;
    let p = &r.numerator;
    let q = trimmed(&r.denominator);
    let k = q.len() - 1;

    let rel = Float::with_val(prec, Float::i_exp(1, -((prec / 2) as i32)));
    let exhausted = |what: &str| BuraError::PrecisionExhausted { bits: prec, reason: format!("{what} did not converge") };

    // poles
    let roots = mp::polynomial_roots(q, 4000).ok_or_else(|| exhausted("denominator root finder"))?;
    let complex = roots.iter().filter(|z| !is_real(z, &rel)).count();
    if complex > 0 {
        return Err(BuraError::ComplexPoles { count: complex });
    }
    let mut poles: Vec<Mp> = roots.into_iter().map(|z| z.re).collect();
    poles.sort_by(|a, b| mp::cmp(b, a));
    let sep = Float::with_val(prec, Float::i_exp(1, -((prec / 4) as i32)));
    for w in poles.windows(2) {
        let gap = Float::with_val(prec, &w[0] - &w[1]);
        let size = mp::abs(&w[0]).max(&mp::abs(&w[1]));
        if gap <= Float::with_val(prec, &size * &sep) {
            return Err(BuraError::RepeatedPoles { pole: w[0].to_f64() });
        }
    }

    // residues of r and of t^-beta r
    let mut r_res = Vec::with_capacity(k);
    let mut res = Vec::with_capacity(k);
    for d in &poles {
        let cs = Float::with_val(prec, mp::horner(p, d) / mp::horner_derivative(q, d));
        let dbeta = Float::with_val(prec, rug::ops::Pow::pow(d, beta as u32));
        res.push(Float::with_val(prec, &cs / &dbeta));
        r_res.push(cs);
    }

    // Taylor coefficients of p/q at 0 give the inverse-power part.
    let mut taylor: Vec<Mp> = Vec::with_capacity(beta);
    for i in 0..beta {
        let mut a = p.get(i).cloned().unwrap_or_else(|| mp::zero(prec));
        for l in 1..=i.min(k) {
            a -= Float::with_val(prec, &q[l] * &taylor[i - l]);
        }
        taylor.push(a);
    }
    let inverse: Vec<Mp> = (1..=beta).map(|j| taylor[beta - j].clone()).collect();

    // Polynomial part: quotient of p by t^beta q.
    let poly = poly_quotient(p, q, beta);

    let zeros_raw = {
        let pt = trimmed(p);
        if pt.len() > 1 {
            mp::polynomial_roots(pt, 4000).ok_or_else(|| exhausted("numerator root finder"))?
        } else {
            Vec::new()
        }
    };
    let zeros_all_real = zeros_raw.iter().all(|z| is_real(z, &rel));
    let mut zeros: Vec<f64> = zeros_raw.iter().map(|z| z.re.to_f64()).collect();
    zeros.sort_by(|a, b| b.total_cmp(a));

    let rounding_error = poles
        .iter()
        .chain(&res)
        .chain(&inverse)
        .chain(&poly)
        .map(|v| {
            if v.is_zero() {
                0.0
            } else {
                let d = Float::with_val(prec, v - v.to_f64());
                (d / v).to_f64().abs()
            }
        })
        .fold(0.0, f64::max);

    let to_f64 = |v: &[Mp]| v.iter().map(|x| x.to_f64()).collect::<Vec<_>>();
    Ok(PartialFractionForm {
        params: r.params,
        minimax_error: r.minimax_error,
        precision_bits: prec,
        poly_part: to_f64(&poly),
        inverse_part: to_f64(&inverse),
        residues: to_f64(&res),
        poles: to_f64(&poles),
        diagnostics: Some(DecompositionDiagnostics {
            zeros,
            zeros_all_real,
            r_residues: to_f64(&r_res),
            rounding_error,
        }),
    })
}

/// Checks `0 > zeta_1 > d_1 > zeta_2 > ... > zeta_k > d_k` using the zeros
/// recorded during decomposition. Returns false when diagnostics are absent.
pub fn zeros_poles_interlace(pf: &PartialFractionForm) -> bool {
    let Some(diag) = &pf.diagnostics else { return false };
    if !diag.zeros_all_real || diag.zeros.len() != pf.poles.len() {
        return false;
    }
    let mut seq = Vec::with_capacity(2 * pf.poles.len() + 1);
    seq.push(0.0);
    for (z, d) in diag.zeros.iter().zip(&pf.poles) {
        seq.push(*z);
        seq.push(*d);
    }
    seq.windows(2).all(|w| w[0] > w[1])
}

fn trimmed(c: &[Mp]) -> &[Mp] {
    let mut n = c.len();
    while n > 1 && c[n - 1].is_zero() {
        n -= 1;
    }
    &c[..n]
}

fn is_real(z: &mp::MpComplex, rel: &Mp) -> bool {
    let scale = z.abs();
    mp::abs(&z.im) <= Float::with_val(rel.prec(), &scale * rel)
}

/// Quotient of `p` divided by `t^shift q`.
fn poly_quotient(p: &[Mp], q: &[Mp], shift: usize) -> Vec<Mp> {
    let prec = q[0].prec();
    let dd = q.len() - 1 + shift;
    let dp = p.len() - 1;
    if dp < dd {
        return Vec::new();
    }
    let mut den = vec![mp::zero(prec); shift];
    den.extend_from_slice(q);
    let lead = den[dd].clone();
    let mut rem: Vec<Mp> = p.to_vec();
    let mut quot = vec![mp::zero(prec); dp - dd + 1];
    for i in (0..=dp - dd).rev() {
        let c = Float::with_val(prec, &rem[i + dd] / &lead);
        for (j, dj) in den.iter().enumerate() {
            rem[i + j] -= Float::with_val(prec, &c * dj);
        }
        quot[i] = c;
    }
    quot
}

//! Best uniform rational approximation of `t^(beta - alpha)` on `[0, 1]`.
//!
//! [`bura_compute`] runs the Remez exchange in extended precision and returns
//! a [`RationalApprox`]; [`partial_fractions`] turns it into the pole/residue
//! data the solver consumes; [`verify_equioscillation`] and
//! [`check_positivity_conditions`] certify the result.

mod equioscillation;
mod partial_fraction;
mod positivity;
mod remez;

pub use equioscillation::{sampled_max_error, verify_equioscillation, ExtremaReport, SPREAD_TOL};
pub use partial_fraction::{
    partial_fractions, zeros_poles_interlace, CoefficientFile, DecompositionDiagnostics,
    PartialFractionForm,
};
pub use positivity::{check_positivity_conditions, stahl_bound, PositivityCertificate, SIGN_TOL};
pub use remez::{bura_compute, RemezOptions, DEFAULT_PRECISION_BITS, PRECISION_ENV};

use crate::error::{BuraError, Result};
use crate::mp::{self, Mp};
use serde::{Deserialize, Serialize};

/// Parameters `(alpha, beta, m, k)` of a beta-BURA: the target is
/// `t^(beta - alpha)`, numerator degree `m`, denominator degree `k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuraParams {
    pub alpha: f64,
    pub beta: u32,
    pub m: usize,
    pub k: usize,
}

impl BuraParams {
    pub fn new(alpha: f64, beta: u32, m: usize, k: usize) -> Result<Self> {
        let p = Self { alpha, beta, m, k };
        p.validate()?;
        Ok(p)
    }

    /// The diagonal 1-BURA `(k, k, 1)`.
    pub fn diagonal(alpha: f64, k: usize) -> Result<Self> {
        Self::new(alpha, 1, k, k)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(BuraError::InvalidParams(format!("alpha = {} must lie in (0, 1)", self.alpha)));
        }
        if self.beta < 1 {
            return Err(BuraError::InvalidParams("beta must be at least 1".into()));
        }
        if self.m > 40 || self.k > 40 {
            return Err(BuraError::InvalidParams(format!(
                "degrees (m, k) = ({}, {}) are outside the supported range (<= 40)",
                self.m, self.k
            )));
        }
        Ok(())
    }

    /// Exponent of the approximated function, `beta - alpha`.
    pub fn exponent(&self) -> f64 {
        self.beta as f64 - self.alpha
    }

    /// Size of a non-degenerate alternation set, `m + k + 2`.
    pub fn alternation_count(&self) -> usize {
        self.m + self.k + 2
    }

    /// `m < k + beta`: the polynomial part of `t^-beta r(t)` vanishes.
    pub fn degree_ok(&self) -> bool {
        self.m < self.k + self.beta as usize
    }
}

/// A rational function `p(t) / q(t)` in the monomial basis, with coefficients
/// held at the working precision of the Remez iteration. `q(0) = 1`.
#[derive(Clone, Debug)]
pub struct RationalApprox {
    pub params: BuraParams,
    pub numerator: Vec<Mp>,
    pub denominator: Vec<Mp>,
    /// Certified sup-norm error on `[0, 1]`.
    pub minimax_error: f64,
    /// Signed levelled error: `f(eta_i) - r(eta_i) = (-1)^(i+1) level` on the
    /// final reference (0-based `i`).
    pub level: Mp,
    /// Final alternation set, increasing, starting at 0.
    pub reference: Vec<Mp>,
    pub precision_bits: u32,
    pub iterations: usize,
    num_dd: Vec<(f64, f64)>,
    den_dd: Vec<(f64, f64)>,
}

impl RationalApprox {
    pub(crate) fn from_parts(
        params: BuraParams,
        numerator: Vec<Mp>,
        denominator: Vec<Mp>,
        minimax_error: f64,
        level: Mp,
        reference: Vec<Mp>,
        iterations: usize,
    ) -> Self {
        let precision_bits = level.prec();
        let num_dd = numerator.iter().map(split_dd).collect();
        let den_dd = denominator.iter().map(split_dd).collect();
        Self {
            params,
            numerator,
            denominator,
            minimax_error,
            level,
            reference,
            precision_bits,
            iterations,
            num_dd,
            den_dd,
        }
    }

    /// Builds an approximant from explicit double coefficients (ascending
    /// powers). The denominator is rescaled so that `q(0) = 1`.
    pub fn from_coefficients(
        params: BuraParams,
        numerator: &[f64],
        denominator: &[f64],
        minimax_error: f64,
        precision_bits: u32,
    ) -> Result<Self> {
        if denominator.is_empty() || denominator[0] == 0.0 {
            return Err(BuraError::InvalidParams("denominator must satisfy q(0) != 0".into()));
        }
        let q0 = mp::mpf(precision_bits, denominator[0]);
        let num: Vec<Mp> = numerator.iter().map(|&v| mp::mpf(precision_bits, v) / &q0).collect();
        let den: Vec<Mp> = denominator.iter().map(|&v| mp::mpf(precision_bits, v) / &q0).collect();
        let level = num.first().cloned().unwrap_or_else(|| mp::zero(precision_bits));
        Ok(Self::from_parts(params, num, den, minimax_error, level, Vec::new(), 0))
    }

    /// `r(t)` at the working precision.
    pub fn evaluate_mp(&self, t: &Mp) -> Mp {
        mp::horner(&self.numerator, t) / mp::horner(&self.denominator, t)
    }

    /// `t^(beta - alpha) - r(t)` at the working precision.
    pub fn error_mp(&self, t: &Mp) -> Mp {
        let a = mp::mpf(t.prec(), self.params.exponent());
        mp::powr(t, &a) - self.evaluate_mp(t)
    }

    /// Double-precision evaluation via compensated Horner on double-double
    /// coefficients.
    pub fn evaluate(&self, t: f64) -> Result<f64> {
        let (q, q_abs) = horner_dd(&self.den_dd, t);
        let qv = q.0 + q.1;
        if qv == 0.0 || qv.abs() <= 64.0 * f64::EPSILON * q_abs {
            return Err(BuraError::PoleHit { t });
        }
        let (p, _) = horner_dd(&self.num_dd, t);
        Ok(dd_div(p, q))
    }

    /// Target value `t^(beta - alpha)` in double precision.
    pub fn target(&self, t: f64) -> f64 {
        if t == 0.0 {
            0.0
        } else {
            t.powf(self.params.exponent())
        }
    }
}

/// Stable double-precision value of `r(t)`.
pub fn evaluate_rational(r: &RationalApprox, t: f64) -> Result<f64> {
    r.evaluate(t)
}

fn split_dd(v: &Mp) -> (f64, f64) {
    let hi = v.to_f64();
    let lo = (v.clone() - hi).to_f64();
    (hi, lo)
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Horner in double-double arithmetic; also returns `sum |c_j| |t|^j`.
fn horner_dd(c: &[(f64, f64)], t: f64) -> ((f64, f64), f64) {
    let mut hi = 0.0;
    let mut lo = 0.0;
    let mut mag = 0.0;
    for &(ch, cl) in c.iter().rev() {
        // (hi, lo) * t
        let (p, pe) = two_prod(hi, t);
        let pe = pe + lo * t;
        // + (ch, cl)
        let (s, se) = two_sum(p, ch);
        let se = se + pe + cl;
        let (h, l) = two_sum(s, se);
        hi = h;
        lo = l;
        mag = mag * t.abs() + ch.abs();
    }
    ((hi, lo), mag)
}

fn dd_div(a: (f64, f64), b: (f64, f64)) -> f64 {
    let q1 = a.0 / b.0;
    // remainder a - q1 * b
    let (p, pe) = two_prod(q1, b.0);
    let r = ((a.0 - p) - pe + a.1 - q1 * b.1) / b.0;
    q1 + r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_validation() {
        assert!(BuraParams::new(0.0, 1, 3, 3).is_err());
        assert!(BuraParams::new(1.0, 1, 3, 3).is_err());
        assert!(BuraParams::new(0.5, 0, 3, 3).is_err());
        let p = BuraParams::diagonal(0.25, 5).unwrap();
        assert_eq!(p.alternation_count(), 12);
        assert!(p.degree_ok());
        assert!(!BuraParams::new(0.5, 1, 6, 5).unwrap().degree_ok());
    }

    #[test]
    fn constant_rational_evaluates_everywhere() {
        let p = BuraParams::new(0.5, 1, 0, 0).unwrap();
        let r = RationalApprox::from_coefficients(p, &[0.5], &[1.0], 0.5, 128).unwrap();
        assert_eq!(r.evaluate(0.7).unwrap(), 0.5);
        assert_eq!(r.evaluate(0.0).unwrap(), 0.5);
    }

    #[test]
    fn pole_is_reported() {
        let p = BuraParams::new(0.5, 1, 0, 1).unwrap();
        // 1 / (1 - 2t) has a pole at t = 1/2
        let r = RationalApprox::from_coefficients(p, &[1.0], &[1.0, -2.0], 0.0, 128).unwrap();
        assert!(matches!(r.evaluate(0.5), Err(BuraError::PoleHit { .. })));
        assert!((r.evaluate(0.25).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn compensated_horner_beats_cancellation() {
        // (1 - t)^6 expanded: naive Horner loses digits near t = 1.
        let c = [1.0, -6.0, 15.0, -20.0, 15.0, -6.0, 1.0];
        let p = BuraParams::new(0.5, 1, 6, 0).unwrap();
        let r = RationalApprox::from_coefficients(p, &c, &[1.0], 0.0, 128).unwrap();
        let t = 0.99;
        let exact = (1.0f64 - t).powi(6);
        assert!(((r.evaluate(t).unwrap() - exact) / exact).abs() < 1e-10);
    }
}

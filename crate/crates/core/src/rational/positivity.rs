use super::{BuraParams, PartialFractionForm};
use serde::{Deserialize, Serialize};

/// Relative sign tolerance: a coefficient counts as nonnegative when it
/// exceeds `-SIGN_TOL * (largest coefficient magnitude)`.
pub const SIGN_TOL: f64 = 1e-12;

/// Sufficient conditions for `A^-beta r(A)` to be entrywise nonnegative on
/// every normalized SPD M-matrix `A`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PositivityCertificate {
    pub d_negative: bool,
    pub residues_positive: bool,
    pub c0_positive: bool,
    pub degree_ok: bool,
    pub certified: bool,
}

pub fn check_positivity_conditions(pf: &PartialFractionForm, params: &BuraParams) -> PositivityCertificate {
    let scale = pf
        .residues
        .iter()
        .chain(&pf.inverse_part)
        .chain(&pf.poly_part)
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = -SIGN_TOL * scale;
    let d_negative = pf.poles.iter().all(|&d| d < 0.0);
    let residues_positive = pf.residues.iter().all(|&c| c > floor);
    let c0_positive = pf.inverse_part.iter().all(|&c| c > floor);
    let degree_ok = params.degree_ok() && pf.poly_part.is_empty();
    PositivityCertificate {
        d_negative,
        residues_positive,
        c0_positive,
        degree_ok,
        certified: d_negative && residues_positive && c0_positive && degree_ok,
    }
}

/// Leading-order asymptotic bound on the relative error of the 1-BURA
/// approximation of `A^-alpha`: `4^(2-alpha) |sin pi(1-alpha)| exp(-2 pi sqrt((1-alpha) k))`.
pub fn stahl_bound(alpha: f64, k: usize) -> f64 {
    let a = 1.0 - alpha;
    4f64.powf(2.0 - alpha) * (std::f64::consts::PI * a).sin().abs() * (-2.0 * std::f64::consts::PI * (a * k as f64).sqrt()).exp()
}

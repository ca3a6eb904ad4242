//! Independent check of the alternation property of a computed approximant.
//!
//! The error curve is rescanned from scratch (it does not reuse the Remez
//! reference): a dense logarithmic sweep that starts where `t^a` drops below
//! a thousandth of the error level, a linear sweep over `[0, 1]`, and golden
//! section refinement of every sampled turning point.

use super::RationalApprox;
use crate::error::{BuraError, Result};
use crate::mp::{self, Mp};
use crate::par;
use rug::Float;
use serde::{Deserialize, Serialize};

/// Allowed relative spread of the extremal magnitudes.
pub const SPREAD_TOL: f64 = 1e-6;

const LOG_SAMPLES: usize = 6000;
const LIN_SAMPLES: usize = 3000;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExtremaReport {
    /// Local extrema of the error on `[0, 1]`, increasing.
    pub points: Vec<f64>,
    /// Signed error `t^a - r(t)` at each point.
    pub deviations: Vec<f64>,
    /// `(max |dev| - min |dev|) / max |dev|`.
    pub spread: f64,
    pub alternation_ok: bool,
}

pub fn verify_equioscillation(r: &RationalApprox) -> Result<ExtremaReport> {
    let prec = r.precision_bits;
    let expected = r.params.alternation_count();
    let a = r.params.exponent();

    let mut grid: Vec<Mp> = vec![mp::zero(prec)];
    let level = r.minimax_error.max(f64::MIN_POSITIVE);
    let lo = (1e-3 * level).powf(1.0 / a).clamp(1e-300, 1e-3);
    let (llo, lhi) = (lo.ln(), 0.0f64);
    for i in 0..LOG_SAMPLES {
        let u = llo + (lhi - llo) * i as f64 / LOG_SAMPLES as f64;
        grid.push(Float::with_val(prec, u).exp());
    }
    for i in 1..LIN_SAMPLES {
        grid.push(Float::with_val(prec, i) / LIN_SAMPLES as u32);
    }
    grid.push(mp::mpf(prec, 1.0));
    grid.sort_by(mp::cmp);
    grid.dedup_by(|x, y| x == y);

    let vals: Vec<Mp> = par::map_slice(&grid, |t| r.error_mp(t));

    let mut ext: Vec<(Mp, Mp)> = vec![(grid[0].clone(), vals[0].clone())];
    let refined: Vec<Option<(Mp, Mp)>> = par::map_range(grid.len() - 2, |j| {
        let i = j + 1;
        let left = Float::with_val(prec, &vals[i] - &vals[i - 1]);
        let right = Float::with_val(prec, &vals[i + 1] - &vals[i]);
        let is_max = left > 0.0 && right <= 0.0;
        let is_min = left < 0.0 && right >= 0.0;
        if !(is_max || is_min) {
            return None;
        }
        let sgn = if is_max { 1 } else { -1 };
        let lo = if grid[i - 1].is_zero() {
            Float::with_val(prec, grid[i].ln_ref()) - 30
        } else {
            Float::with_val(prec, grid[i - 1].ln_ref())
        };
        let hi = Float::with_val(prec, grid[i + 1].ln_ref());
        let t = golden(r, sgn, lo, hi);
        let e = r.error_mp(&t);
        if Float::with_val(prec, &e * sgn) >= Float::with_val(prec, &vals[i] * sgn) {
            Some((t, e))
        } else {
            Some((grid[i].clone(), vals[i].clone()))
        }
    });
    ext.extend(refined.into_iter().flatten());
    let last = grid.len() - 1;
    ext.push((grid[last].clone(), vals[last].clone()));

    // Neighbouring grid points can bracket the same extremum; merge points
    // that coincide after refinement.
    ext.dedup_by(|b, a| {
        let gap = Float::with_val(prec, &b.0 - &a.0).abs();
        let size = mp::abs(&a.0).max(&mp::abs(&b.0));
        gap <= Float::with_val(prec, &size * 1e-20)
    });

    let found = ext.len();
    if found != expected {
        return Err(BuraError::WrongExtremaCount { expected, found });
    }
    let points: Vec<f64> = ext.iter().map(|(t, _)| t.to_f64()).collect();
    let deviations: Vec<f64> = ext.iter().map(|(_, e)| e.to_f64()).collect();
    let max = deviations.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min = deviations.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    let spread = if max > 0.0 { (max - min) / max } else { 0.0 };
    let alternates = deviations.windows(2).all(|w| w[0] * w[1] < 0.0);
    Ok(ExtremaReport {
        alternation_ok: alternates && spread <= SPREAD_TOL && points[0] == 0.0 && points[found - 1] == 1.0,
        points,
        deviations,
        spread,
    })
}

/// Largest `|t^a - r(t)|` over `samples` points: half logarithmically spaced
/// on `[1e-20, 1]`, half uniform on `[0, 1]`. Double-precision evaluation.
pub fn sampled_max_error(r: &RationalApprox, samples: usize) -> Result<f64> {
    let half = (samples / 2).max(2);
    let (llo, lhi) = ((1e-20f64).ln(), 0.0f64);
    let point = |i: usize| -> f64 {
        if i < half {
            (llo + (lhi - llo) * i as f64 / (half - 1) as f64).exp()
        } else {
            (i - half) as f64 / (half - 1) as f64
        }
    };
    let errs = par::map_range(2 * half, |i| {
        let t = point(i);
        r.evaluate(t).map(|v| (r.target(t) - v).abs())
    });
    let mut max = 0.0f64;
    for e in errs {
        max = max.max(e?);
    }
    Ok(max)
}

fn golden(r: &RationalApprox, sgn: i32, mut lo: Mp, mut hi: Mp) -> Mp {
    let prec = lo.prec();
    let g = |u: &Mp| -> Mp { r.error_mp(&Float::with_val(prec, u.exp_ref())) * sgn };
    let ratio = (Float::with_val(prec, 5).sqrt() - 1u32) / 2u32;
    let step = |lo: &Mp, hi: &Mp| Float::with_val(prec, &ratio * Float::with_val(prec, hi - lo));
    let mut c = Float::with_val(prec, &hi - step(&lo, &hi));
    let mut d = Float::with_val(prec, &lo + step(&lo, &hi));
    let (mut gc, mut gd) = (g(&c), g(&d));
    for _ in 0..100 {
        if gc > gd {
            hi = d;
            d = c;
            gd = gc;
            c = Float::with_val(prec, &hi - step(&lo, &hi));
            gc = g(&c);
        } else {
            lo = c;
            c = d;
            gc = gd;
            d = Float::with_val(prec, &lo + step(&lo, &hi));
            gd = g(&d);
        }
    }
    (Float::with_val(prec, &lo + &hi) / 2u32).exp()
}

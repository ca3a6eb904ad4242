//! Rational Remez exchange for `t^a` on `[0, 1]`, `a = beta - alpha > 0`.
//!
//! Each iteration solves the levelled interpolation problem
//! `p(x_i) - (f(x_i) - s_i E) q(x_i) = 0` on the current reference. The
//! equations are linear in `(p, q)` for fixed `E`, so admissible levels are the
//! roots of the degree-`k+1` polynomial `det C(E)`. The root whose denominator
//! stays positive on the reference is polished by Newton's method on the full
//! nonlinear system, and the reference is replaced by all local extrema of
//! the new error curve.

use super::{BuraParams, RationalApprox};
use crate::error::{BuraError, Result};
use crate::mp::{self, Mp, MpMatrix};
use log::debug;
use rug::Float;

pub const DEFAULT_PRECISION_BITS: u32 = 256;
pub const PRECISION_ENV: &str = "BURA_PRECISION_BITS";

#[derive(Clone, Debug, PartialEq)]
pub struct RemezOptions {
    /// Initial working precision (significand bits).
    pub precision_bits: u32,
    /// Precision is doubled on breakdown until this cap.
    pub max_precision_bits: u32,
    pub max_iterations: usize,
    /// Stop when `(max|e| - min|e|) / max|e|` over the alternation set drops
    /// below this.
    pub equioscillation_tol: f64,
}

impl Default for RemezOptions {
    fn default() -> Self {
        let precision_bits = std::env::var(PRECISION_ENV)
            .ok()
            .and_then(|s| s.trim().parse::<u32>().ok())
            .unwrap_or(DEFAULT_PRECISION_BITS);
        Self {
            precision_bits,
            max_precision_bits: precision_bits.max(1024),
            max_iterations: 60,
            equioscillation_tol: 1e-12,
        }
    }
}

impl RemezOptions {
    pub fn with_precision(bits: u32) -> Self {
        Self { precision_bits: bits, max_precision_bits: bits.max(1024), ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if self.precision_bits < 128 {
            return Err(BuraError::InvalidParams(format!(
                "precision_bits = {} is below the 128-bit minimum",
                self.precision_bits
            )));
        }
        if !(self.equioscillation_tol > 0.0 && self.equioscillation_tol < 1.0) {
            return Err(BuraError::InvalidParams("equioscillation_tol must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

enum Failure {
    Stalled { iterations: usize, spread: f64 },
    Lost(String),
}

/// Computes the beta-BURA of `t^(beta - alpha)` on `[0, 1]` in `R(m, k)`.
pub fn bura_compute(params: &BuraParams, opts: &RemezOptions) -> Result<RationalApprox> {
    params.validate()?;
    opts.validate()?;
    let mut bits = opts.precision_bits;
    loop {
        match Remez::new(params, bits).run(opts) {
            Ok(r) => return Ok(r),
            Err(fail) => {
                let next = bits.saturating_mul(2);
                if next <= opts.max_precision_bits {
                    debug!("remez {:?} failed at {} bits, retrying at {}", params, bits, next);
                    bits = next;
                    continue;
                }
                return Err(match fail {
                    Failure::Stalled { iterations, spread } => BuraError::NonConvergence { iterations, spread },
                    Failure::Lost(reason) => BuraError::PrecisionExhausted { bits, reason },
                });
            }
        }
    }
}

struct Level {
    p: Vec<Mp>,
    q: Vec<Mp>,
    e: Mp,
}

struct Remez<'a> {
    params: &'a BuraParams,
    prec: u32,
    exponent: Mp,
    m: usize,
    k: usize,
    n: usize,
}

impl<'a> Remez<'a> {
    fn new(params: &'a BuraParams, prec: u32) -> Self {
        let exponent = mp::mpf(prec, params.beta as f64) - mp::mpf(prec, params.alpha);
        Self { params, prec, exponent, m: params.m, k: params.k, n: params.alternation_count() }
    }

    fn target(&self, t: &Mp) -> Mp {
        mp::powr(t, &self.exponent)
    }

    /// Sign pattern of the levelled error: -1 at t = 0, then alternating.
    fn sign(i: usize) -> i32 {
        if i % 2 == 0 {
            -1
        } else {
            1
        }
    }

    fn run(&self, opts: &RemezOptions) -> std::result::Result<RationalApprox, Failure> {
        let mut x = self.initial_reference();
        let mut spread = f64::INFINITY;
        for it in 1..=opts.max_iterations {
            let lvl = self
                .level_solve(&x)
                .ok_or_else(|| Failure::Lost("no levelled solution with a pole-free denominator".into()))?;
            let ext = self.search_extrema(&lvl, &x)?;
            let mags: Vec<f64> = ext.iter().map(|(_, e)| e.to_f64().abs()).collect();
            let max = mags.iter().cloned().fold(0.0, f64::max);
            let min = mags.iter().cloned().fold(f64::INFINITY, f64::min);
            spread = if max > 0.0 { (max - min) / max } else { 0.0 };
            debug!(
                "remez {:?} prec {} it {}: level {:.10e} spread {:.3e}",
                self.params,
                self.prec,
                it,
                lvl.e.to_f64(),
                spread
            );
            x = ext.iter().map(|(t, _)| t.clone()).collect();
            if spread < opts.equioscillation_tol {
                return Ok(RationalApprox::from_parts(*self.params, lvl.p, lvl.q, max, lvl.e, x, it));
            }
        }
        Err(Failure::Stalled { iterations: opts.max_iterations, spread })
    }

    /// Reference points uniform in `s = sqrt(-ln t)`, from `s_max` down to 0,
    /// plus `t = 0`. `s_max` is tied to the expected error through
    /// `t_min^a ~ E`, with `E` from the exponential asymptotics.
    fn initial_reference(&self) -> Vec<Mp> {
        let n = self.n;
        let prec = self.prec;
        if n == 2 {
            return vec![mp::zero(prec), mp::mpf(prec, 1.0)];
        }
        let a = self.params.exponent();
        let e0 = if self.k == 0 {
            0.5
        } else {
            let k = self.k as f64;
            4f64.powf(1.0 + a)
                * (std::f64::consts::PI * a).sin().abs()
                * (-2.0 * std::f64::consts::PI * (a * k).sqrt()).exp()
        };
        let e0 = e0.clamp(1e-300, 0.5);
        let s_max = (0.8 * (-e0.ln()) / a.min(1.0)).max(0.5).sqrt();
        let mut x = Vec::with_capacity(n);
        x.push(mp::zero(prec));
        for j in 1..n {
            let s = s_max * (n - 1 - j) as f64 / (n - 2) as f64;
            x.push(Float::with_val(prec, -s * s).exp());
        }
        x[n - 1] = mp::mpf(prec, 1.0);
        x
    }

    fn powers(&self, t: &Mp, deg: usize) -> Vec<Mp> {
        let mut pw = Vec::with_capacity(deg + 1);
        pw.push(mp::mpf(self.prec, 1.0));
        for j in 1..=deg {
            let next = Float::with_val(self.prec, &pw[j - 1] * t);
            pw.push(next);
        }
        pw
    }

    fn c_matrix(&self, pw: &[Vec<Mp>], f: &[Mp], e: &Mp) -> MpMatrix {
        let (m, k, n) = (self.m, self.k, self.n);
        let mut c = MpMatrix::zeros(n, self.prec);
        for i in 0..n {
            for j in 0..=m {
                *c.at_mut(i, j) = pw[i][j].clone();
            }
            let w = Float::with_val(self.prec, e * Self::sign(i)) - &f[i];
            for j in 0..=k {
                *c.at_mut(i, m + 1 + j) = Float::with_val(self.prec, &w * &pw[i][j]);
            }
        }
        c
    }

    fn level_solve(&self, x: &[Mp]) -> Option<Level> {
        let prec = self.prec;
        let (m, k, n) = (self.m, self.k, self.n);
        let f: Vec<Mp> = x.iter().map(|t| self.target(t)).collect();
        let pw: Vec<Vec<Mp>> = x.iter().map(|t| self.powers(t, m.max(k))).collect();

        // det C(E) is a polynomial of degree <= k + 1 in E; interpolate it at
        // Chebyshev nodes.
        let d = k + 1;
        let pi = mp::pi(prec);
        let nodes: Vec<Mp> = (0..=d)
            .map(|j| {
                let ang = Float::with_val(prec, &pi * (2 * j + 1) as u32) / (2 * (d + 1)) as u32;
                ang.cos()
            })
            .collect();
        let mut vander = MpMatrix::zeros(d + 1, prec);
        let mut dets = Vec::with_capacity(d + 1);
        for (r, node) in nodes.iter().enumerate() {
            let pws = self.powers(node, d);
            for (cidx, v) in pws.into_iter().enumerate() {
                *vander.at_mut(r, cidx) = v;
            }
            dets.push(self.c_matrix(&pw, &f, node).lu().det());
        }
        let coeffs = vander.lu().solve(&dets)?;
        let tol = Float::with_val(prec, Float::i_exp(1, -((prec * 3 / 4) as i32)));
        let deg = mp::trim_degree(&coeffs, &tol);
        if deg == 0 {
            return None;
        }
        let roots = mp::polynomial_roots(&coeffs[..=deg], 2000)?;
        let mut cands: Vec<Mp> = roots
            .into_iter()
            .filter(|z| {
                let im = mp::abs(&z.im);
                let re = mp::abs(&z.re);
                im <= Float::with_val(prec, &re * 1e-6)
            })
            .map(|z| z.re)
            .collect();
        cands.sort_by(|a, b| mp::cmp(&mp::abs(a), &mp::abs(b)));

        for e in cands {
            let Some((p, q)) = self.null_vector(&pw, &f, &e) else { continue };
            if !Self::positive_on(&q, x) {
                continue;
            }
            let lvl = match self.newton_polish(&pw, &f, Level { p: p.clone(), q: q.clone(), e: e.clone() }) {
                Some(l) if Self::positive_on(&l.q, x) => l,
                _ => Level { p, q, e },
            };
            return Some(lvl);
        }
        let _ = n;
        None
    }

    fn positive_on(q: &[Mp], x: &[Mp]) -> bool {
        x.iter().all(|t| mp::horner(q, t) > 0.0)
    }

    /// Solves the first `n - 1` levelled equations with `q_0 = 1`.
    fn null_vector(&self, pw: &[Vec<Mp>], f: &[Mp], e: &Mp) -> Option<(Vec<Mp>, Vec<Mp>)> {
        let (m, k, n) = (self.m, self.k, self.n);
        let c = self.c_matrix(pw, f, e);
        let mut a = MpMatrix::zeros(n - 1, self.prec);
        let mut rhs = Vec::with_capacity(n - 1);
        for i in 0..n - 1 {
            let mut col = 0;
            for j in 0..n {
                if j == m + 1 {
                    rhs.push(-c.at(i, j).clone());
                } else {
                    *a.at_mut(i, col) = c.at(i, j).clone();
                    col += 1;
                }
            }
        }
        let z = a.lu().solve(&rhs)?;
        let p = z[..=m].to_vec();
        let mut q = Vec::with_capacity(k + 1);
        q.push(mp::mpf(self.prec, 1.0));
        q.extend_from_slice(&z[m + 1..]);
        Some((p, q))
    }

    /// Newton's method on `F_i = p(x_i) - (f_i - s_i E) q(x_i)` with unknowns
    /// `(p_0..p_m, q_1..q_k, E)`.
    fn newton_polish(&self, pw: &[Vec<Mp>], f: &[Mp], mut lvl: Level) -> Option<Level> {
        let (m, k, n) = (self.m, self.k, self.n);
        let prec = self.prec;
        let tol = Float::with_val(prec, Float::i_exp(1, -(prec as i32) + 32));
        for _ in 0..25 {
            let mut jac = MpMatrix::zeros(n, prec);
            let mut rhs = Vec::with_capacity(n);
            for i in 0..n {
                let pv = dot(&lvl.p, &pw[i]);
                let qv = dot(&lvl.q, &pw[i]);
                let s = Self::sign(i);
                let w = Float::with_val(prec, &f[i] - Float::with_val(prec, &lvl.e * s));
                rhs.push(Float::with_val(prec, &w * &qv) - pv);
                for j in 0..=m {
                    *jac.at_mut(i, j) = pw[i][j].clone();
                }
                for j in 1..=k {
                    *jac.at_mut(i, m + j) = -Float::with_val(prec, &w * &pw[i][j]);
                }
                *jac.at_mut(i, n - 1) = Float::with_val(prec, &qv * s);
            }
            let dz = jac.lu().solve(&rhs)?;
            for j in 0..=m {
                lvl.p[j] += &dz[j];
            }
            for j in 1..=k {
                lvl.q[j] += &dz[m + j];
            }
            lvl.e += &dz[n - 1];
            let step = mp::max_abs(prec, dz.iter());
            let size = mp::max_abs(prec, lvl.p.iter().chain(lvl.q.iter())).max(&mp::mpf(prec, 1.0));
            if step <= Float::with_val(prec, &size * &tol) {
                return Some(lvl);
            }
        }
        None
    }

    fn error_at(&self, lvl: &Level, t: &Mp) -> (Mp, Mp) {
        let q = mp::horner(&lvl.q, t);
        let r = Float::with_val(self.prec, mp::horner(&lvl.p, t) / &q);
        (self.target(t) - r, q)
    }

    /// Locates all local extrema of the error on `[0, 1]` and selects an
    /// alternating subset of size `n` with the largest magnitudes at the ends.
    fn search_extrema(&self, lvl: &Level, x: &[Mp]) -> std::result::Result<Vec<(Mp, Mp)>, Failure> {
        let prec = self.prec;
        let grid = self.search_grid(x);
        let mut vals = Vec::with_capacity(grid.len());
        for t in &grid {
            let (e, q) = self.error_at(lvl, t);
            if !(q > 0.0) {
                return Err(Failure::Lost(format!("denominator vanishes near t = {:.3e}", t.to_f64())));
            }
            vals.push(e);
        }

        let mut cands: Vec<(Mp, Mp)> = vec![(grid[0].clone(), vals[0].clone())];
        for i in 1..grid.len() - 1 {
            let left = Float::with_val(prec, &vals[i] - &vals[i - 1]);
            let right = Float::with_val(prec, &vals[i + 1] - &vals[i]);
            let turning = (left > 0.0 && right <= 0.0) || (left < 0.0 && right >= 0.0);
            if !turning {
                continue;
            }
            let lo = if grid[i - 1].is_zero() {
                Float::with_val(prec, grid[i].ln_ref()) - 23
            } else {
                Float::with_val(prec, grid[i - 1].ln_ref())
            };
            let hi = Float::with_val(prec, grid[i + 1].ln_ref());
            let sgn = if vals[i] > 0.0 { 1 } else { -1 };
            let t = self.golden_max(lvl, sgn, lo, hi);
            let (e, _) = self.error_at(lvl, &t);
            // refinement must not lose the sampled value
            if mp::abs(&e) >= mp::abs(&vals[i]) {
                cands.push((t, e));
            } else {
                cands.push((grid[i].clone(), vals[i].clone()));
            }
        }
        let last = grid.len() - 1;
        cands.push((grid[last].clone(), vals[last].clone()));

        let mut runs: Vec<(Mp, Mp)> = Vec::new();
        for (t, e) in cands {
            if e.is_zero() {
                continue;
            }
            match runs.last_mut() {
                Some(prev) if (prev.1 > 0.0) == (e > 0.0) => {
                    if mp::abs(&e) > mp::abs(&prev.1) {
                        *prev = (t, e);
                    }
                }
                _ => runs.push((t, e)),
            }
        }
        if runs.len() < self.n {
            return Err(Failure::Lost(format!(
                "error curve has {} alternations, expected {}",
                runs.len(),
                self.n
            )));
        }
        while runs.len() > self.n {
            if mp::abs(&runs[0].1) < mp::abs(&runs[runs.len() - 1].1) {
                runs.remove(0);
            } else {
                runs.pop();
            }
        }
        Ok(runs)
    }

    /// Sample points: `t = 0`, and between consecutive reference points (the
    /// first interval extended eight decades below `x_1`) a logarithmic and a
    /// linear sweep.
    fn search_grid(&self, x: &[Mp]) -> Vec<Mp> {
        let prec = self.prec;
        let mut edges: Vec<Mp> = x.iter().filter(|t| !t.is_zero()).cloned().collect();
        let lo = Float::with_val(prec, &edges[0] * 1e-8);
        edges.insert(0, lo);
        let mut pts = vec![mp::zero(prec)];
        const LOG_STEPS: usize = 40;
        const LIN_STEPS: usize = 20;
        for w in edges.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let la = Float::with_val(prec, a.ln_ref());
            let lb = Float::with_val(prec, b.ln_ref());
            let width = Float::with_val(prec, &lb - &la);
            for i in 0..LOG_STEPS {
                let u = Float::with_val(prec, &width * i as u32) / LOG_STEPS as u32 + &la;
                pts.push(u.exp());
            }
            let span = Float::with_val(prec, b - a);
            for i in 1..LIN_STEPS {
                let u = Float::with_val(prec, &span * i as u32) / LIN_STEPS as u32 + a;
                pts.push(u);
            }
        }
        pts.push(mp::mpf(prec, 1.0));
        pts.sort_by(mp::cmp);
        pts.dedup_by(|a, b| a == b);
        pts
    }

    /// Golden-section search for the maximum of `sgn * e(exp(u))` on `[lo, hi]`.
    fn golden_max(&self, lvl: &Level, sgn: i32, mut lo: Mp, mut hi: Mp) -> Mp {
        let prec = self.prec;
        let g = |u: &Mp| -> Mp {
            let t = Float::with_val(prec, u.exp_ref());
            let (e, _) = self.error_at(lvl, &t);
            e * sgn
        };
        let ratio = (Float::with_val(prec, 5).sqrt() - 1u32) / 2u32;
        let mut c = Float::with_val(prec, &hi - Float::with_val(prec, &ratio * Float::with_val(prec, &hi - &lo)));
        let mut d = Float::with_val(prec, &lo + Float::with_val(prec, &ratio * Float::with_val(prec, &hi - &lo)));
        let mut gc = g(&c);
        let mut gd = g(&d);
        for _ in 0..90 {
            if gc > gd {
                hi = d;
                d = c;
                gd = gc;
                c = Float::with_val(prec, &hi - Float::with_val(prec, &ratio * Float::with_val(prec, &hi - &lo)));
                gc = g(&c);
            } else {
                lo = c;
                c = d;
                gc = gd;
                d = Float::with_val(prec, &lo + Float::with_val(prec, &ratio * Float::with_val(prec, &hi - &lo)));
                gd = g(&d);
            }
        }
        let mid = Float::with_val(prec, &lo + &hi) / 2u32;
        mid.exp()
    }
}

fn dot(c: &[Mp], pw: &[Mp]) -> Mp {
    let prec = pw[0].prec();
    let mut acc = mp::zero(prec);
    for (ci, pi) in c.iter().zip(pw) {
        acc += Float::with_val(prec, ci * pi);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> RemezOptions {
        RemezOptions::with_precision(256)
    }

    #[test]
    fn best_constant_for_sqrt_is_one_half() {
        let p = BuraParams::new(0.5, 1, 0, 0).unwrap();
        let r = bura_compute(&p, &opts()).unwrap();
        assert!((r.minimax_error - 0.5).abs() < 1e-15);
        assert!((r.evaluate(0.7).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn table_entry_alpha_quarter_k5() {
        let p = BuraParams::diagonal(0.25, 5).unwrap();
        let r = bura_compute(&p, &opts()).unwrap();
        assert!(((r.minimax_error - 2.8676e-5) / 2.8676e-5).abs() < 1e-2);
        // r(0) equals the levelled error
        assert!(((r.evaluate(0.0).unwrap() - r.minimax_error) / r.minimax_error).abs() < 1e-10);
    }

    #[test]
    fn low_precision_is_rejected() {
        let p = BuraParams::diagonal(0.5, 3).unwrap();
        let mut o = opts();
        o.precision_bits = 64;
        assert!(matches!(bura_compute(&p, &o), Err(BuraError::InvalidParams(_))));
    }

    #[test]
    fn precision_cap_reports_exhaustion_or_nonconvergence() {
        let p = BuraParams::diagonal(0.5, 6).unwrap();
        let o = RemezOptions { max_iterations: 1, max_precision_bits: 128, precision_bits: 128, equioscillation_tol: 1e-14 };
        match bura_compute(&p, &o) {
            Err(BuraError::NonConvergence { iterations, spread }) => {
                assert_eq!(iterations, 1);
                assert!(spread > 0.0);
            }
            Err(BuraError::PrecisionExhausted { bits, .. }) => assert_eq!(bits, 128),
            other => panic!("unexpected {other:?}"),
        }
    }
}

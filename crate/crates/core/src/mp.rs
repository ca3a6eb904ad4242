//! Extended-precision scalars, small dense linear algebra and polynomial
//! root finding on top of MPFR floats.

use rug::float::Constant;
use rug::ops::Pow;
use rug::Float;
use std::cmp::Ordering;

pub type Mp = Float;

#[inline]
pub fn mpf(prec: u32, v: f64) -> Mp {
    Float::with_val(prec, v)
}

#[inline]
pub fn zero(prec: u32) -> Mp {
    Float::new(prec)
}

pub fn pi(prec: u32) -> Mp {
    Float::with_val(prec, Constant::Pi)
}

/// `t^a` for `t >= 0`, `a > 0`, with `0^a = 0`.
pub fn powr(t: &Mp, a: &Mp) -> Mp {
    if t.is_zero() {
        return zero(t.prec());
    }
    Float::with_val(t.prec(), t.pow(a))
}

pub fn abs(x: &Mp) -> Mp {
    Float::with_val(x.prec(), x.abs_ref())
}

pub fn max_abs<'a, I: IntoIterator<Item = &'a Mp>>(prec: u32, it: I) -> Mp {
    let mut m = zero(prec);
    for v in it {
        let a = abs(v);
        if a > m {
            m = a;
        }
    }
    m
}

/// Horner evaluation of `c[0] + c[1] t + ... + c[n] t^n`.
pub fn horner(c: &[Mp], t: &Mp) -> Mp {
    let prec = t.prec();
    let mut acc = zero(prec);
    for ci in c.iter().rev() {
        acc *= t;
        acc += ci;
    }
    acc
}

pub fn horner_derivative(c: &[Mp], t: &Mp) -> Mp {
    let prec = t.prec();
    let mut acc = zero(prec);
    for (j, cj) in c.iter().enumerate().skip(1).rev() {
        acc *= t;
        acc += Float::with_val(prec, cj * (j as u32));
    }
    acc
}

/// Dense square matrix in row-major order.
#[derive(Clone, Debug)]
pub struct MpMatrix {
    pub n: usize,
    pub data: Vec<Mp>,
}

impl MpMatrix {
    pub fn zeros(n: usize, prec: u32) -> Self {
        Self { n, data: vec![zero(prec); n * n] }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> &Mp {
        &self.data[i * self.n + j]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut Mp {
        &mut self.data[i * self.n + j]
    }

    /// LU factorisation with partial pivoting. Never fails; a zero pivot is
    /// recorded and makes `det` vanish and `solve` return `None`.
    pub fn lu(mut self) -> MpLu {
        let n = self.n;
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1i32;
        let mut singular = false;
        for col in 0..n {
            let mut piv = col;
            let mut best = abs(self.at(col, col));
            for r in col + 1..n {
                let v = abs(self.at(r, col));
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best.is_zero() {
                singular = true;
                continue;
            }
            if piv != col {
                for j in 0..n {
                    self.data.swap(col * n + j, piv * n + j);
                }
                perm.swap(col, piv);
                sign = -sign;
            }
            let pivot = self.at(col, col).clone();
            for r in col + 1..n {
                let factor = Float::with_val(pivot.prec(), self.at(r, col) / &pivot);
                if factor.is_zero() {
                    continue;
                }
                for j in col + 1..n {
                    let delta = Float::with_val(pivot.prec(), &factor * self.at(col, j));
                    *self.at_mut(r, j) -= delta;
                }
                *self.at_mut(r, col) = factor;
            }
        }
        MpLu { lu: self, perm, sign, singular }
    }
}

pub struct MpLu {
    lu: MpMatrix,
    perm: Vec<usize>,
    sign: i32,
    singular: bool,
}

impl MpLu {
    pub fn det(&self) -> Mp {
        let prec = self.lu.data.first().map_or(64, |v| v.prec());
        if self.singular {
            return zero(prec);
        }
        let mut d = mpf(prec, self.sign as f64);
        for i in 0..self.lu.n {
            d *= self.lu.at(i, i);
        }
        d
    }

    pub fn solve(&self, rhs: &[Mp]) -> Option<Vec<Mp>> {
        if self.singular {
            return None;
        }
        let n = self.lu.n;
        let mut y: Vec<Mp> = self.perm.iter().map(|&p| rhs[p].clone()).collect();
        for i in 0..n {
            for j in 0..i {
                let t = Float::with_val(y[i].prec(), self.lu.at(i, j) * &y[j]);
                y[i] -= t;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let t = Float::with_val(y[i].prec(), self.lu.at(i, j) * &y[j]);
                y[i] -= t;
            }
            y[i] /= self.lu.at(i, i);
        }
        Some(y)
    }
}

/// Complex number with MPFR components; only what root finding needs.
#[derive(Clone, Debug)]
pub struct MpComplex {
    pub re: Mp,
    pub im: Mp,
}

impl MpComplex {
    pub fn new(re: Mp, im: Mp) -> Self {
        Self { re, im }
    }

    pub fn real(re: Mp) -> Self {
        let prec = re.prec();
        Self { re, im: zero(prec) }
    }

    pub fn prec(&self) -> u32 {
        self.re.prec()
    }

    pub fn add(&self, o: &Self) -> Self {
        let p = self.prec();
        Self::new(Float::with_val(p, &self.re + &o.re), Float::with_val(p, &self.im + &o.im))
    }

    pub fn sub(&self, o: &Self) -> Self {
        let p = self.prec();
        Self::new(Float::with_val(p, &self.re - &o.re), Float::with_val(p, &self.im - &o.im))
    }

    pub fn mul(&self, o: &Self) -> Self {
        let p = self.prec();
        let rr = Float::with_val(p, &self.re * &o.re);
        let ii = Float::with_val(p, &self.im * &o.im);
        let ri = Float::with_val(p, &self.re * &o.im);
        let ir = Float::with_val(p, &self.im * &o.re);
        Self::new(rr - ii, ri + ir)
    }

    pub fn norm_sqr(&self) -> Mp {
        let p = self.prec();
        Float::with_val(p, self.re.square_ref()) + Float::with_val(p, self.im.square_ref())
    }

    pub fn abs(&self) -> Mp {
        self.norm_sqr().sqrt()
    }

    pub fn div(&self, o: &Self) -> Self {
        let p = self.prec();
        let den = o.norm_sqr();
        let re = Float::with_val(p, &self.re * &o.re) + Float::with_val(p, &self.im * &o.im);
        let im = Float::with_val(p, &self.im * &o.re) - Float::with_val(p, &self.re * &o.im);
        Self::new(re / &den, im / &den)
    }

    pub fn recip(&self) -> Self {
        let p = self.prec();
        let den = self.norm_sqr();
        Self::new(Float::with_val(p, &self.re / &den), -Float::with_val(p, &self.im / &den))
    }
}

/// Evaluates a real polynomial and its derivative at a complex point.
fn horner_complex(c: &[Mp], z: &MpComplex) -> (MpComplex, MpComplex) {
    let prec = z.prec();
    let mut p = MpComplex::real(zero(prec));
    let mut dp = MpComplex::real(zero(prec));
    for ci in c.iter().rev() {
        dp = dp.mul(z).add(&p);
        p = p.mul(z);
        p.re += ci;
    }
    (p, dp)
}

/// Drops trailing coefficients that are negligible relative to the largest one.
pub fn trim_degree(c: &[Mp], rel_tol: &Mp) -> usize {
    let prec = rel_tol.prec();
    let scale = max_abs(prec, c.iter());
    let thresh = Float::with_val(prec, &scale * rel_tol);
    let mut deg = c.len().saturating_sub(1);
    while deg > 0 && abs(&c[deg]) <= thresh {
        deg -= 1;
    }
    deg
}

/// All roots of `c[0] + c[1] z + ... + c[d] z^d` (leading coefficient nonzero)
/// by the Aberth–Ehrlich simultaneous iteration, started on circles read off
/// the Newton polygon of the coefficient magnitudes. Returns `None` if the
/// iteration does not settle.
pub fn polynomial_roots(c: &[Mp], max_iter: usize) -> Option<Vec<MpComplex>> {
    let d = c.len() - 1;
    if d == 0 {
        return Some(Vec::new());
    }
    let prec = c[0].prec();
    // Zero roots are split off exactly.
    let lead_zeros = c.iter().take_while(|v| v.is_zero()).count();
    if lead_zeros > 0 {
        let mut roots = polynomial_roots(&c[lead_zeros..], max_iter)?;
        roots.extend((0..lead_zeros).map(|_| MpComplex::real(zero(prec))));
        return Some(roots);
    }

    let mut z = newton_polygon_start(c, prec);
    let eps = Float::with_val(prec, Float::i_exp(1, -(prec as i32) + 24));
    let mut done = vec![false; d];
    for _ in 0..max_iter {
        let mut all_done = true;
        for i in 0..d {
            if done[i] {
                continue;
            }
            let (p, dp) = horner_complex(c, &z[i]);
            if p.re.is_zero() && p.im.is_zero() {
                done[i] = true;
                continue;
            }
            let newton = p.div(&dp);
            let mut sum = MpComplex::real(zero(prec));
            for (j, zj) in z.iter().enumerate() {
                if j != i {
                    sum = sum.add(&z[i].sub(zj).recip());
                }
            }
            let mut one = MpComplex::real(mpf(prec, 1.0));
            one = one.sub(&newton.mul(&sum));
            let w = newton.div(&one);
            let step = w.abs();
            z[i] = z[i].sub(&w);
            let size = z[i].abs();
            if step <= Float::with_val(prec, &size * &eps) {
                done[i] = true;
            } else {
                all_done = false;
            }
        }
        if all_done {
            // a couple of Newton polishes
            for zi in z.iter_mut() {
                for _ in 0..3 {
                    let (p, dp) = horner_complex(c, zi);
                    if dp.re.is_zero() && dp.im.is_zero() {
                        break;
                    }
                    *zi = zi.sub(&p.div(&dp));
                }
            }
            return Some(z);
        }
    }
    None
}

fn newton_polygon_start(c: &[Mp], prec: u32) -> Vec<MpComplex> {
    let d = c.len() - 1;
    // log-magnitudes; zero coefficients sit at -inf and never join the hull.
    let logs: Vec<f64> = c
        .iter()
        .map(|v| if v.is_zero() { f64::NEG_INFINITY } else { abs(v).ln().to_f64() })
        .collect();
    // upper convex hull of (i, logs[i])
    let mut hull: Vec<usize> = Vec::new();
    for i in 0..=d {
        if logs[i] == f64::NEG_INFINITY {
            continue;
        }
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let cross = (b as f64 - a as f64) * (logs[i] - logs[a]) - (i as f64 - a as f64) * (logs[b] - logs[a]);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    let mut z = Vec::with_capacity(d);
    let two_pi = std::f64::consts::TAU;
    for w in hull.windows(2) {
        let (a, b) = (w[0], w[1]);
        let count = b - a;
        let log_r = (logs[a] - logs[b]) / count as f64;
        for l in 0..count {
            let ang = two_pi * (l as f64) / count as f64 + two_pi * (a as f64) / d as f64 + 0.4;
            let r = Float::with_val(prec, log_r).exp();
            let re = Float::with_val(prec, &r * ang.cos());
            let im = Float::with_val(prec, &r * ang.sin());
            z.push(MpComplex::new(re, im));
        }
    }
    z
}

pub fn cmp(a: &Mp, b: &Mp) -> Ordering {
    a.partial_cmp(b).unwrap_or(Ordering::Equal)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_determinant_and_solve() {
        let p = 128;
        let mut a = MpMatrix::zeros(3, p);
        let vals = [[2.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 4.0]];
        for i in 0..3 {
            for j in 0..3 {
                *a.at_mut(i, j) = mpf(p, vals[i][j]);
            }
        }
        let lu = a.lu();
        // 2*(12-1) - 1*(4-0) = 18
        assert!((lu.det().to_f64() - 18.0).abs() < 1e-30);
        let x = lu.solve(&[mpf(p, 3.0), mpf(p, 5.0), mpf(p, 5.0)]).unwrap();
        for xi in x {
            assert!((xi.to_f64() - 1.0).abs() < 1e-30);
        }
    }

    #[test]
    fn roots_spanning_many_magnitudes() {
        let p = 256;
        let roots = [-1e-12, -3e-7, -0.01, -2.0, -50.0];
        // expand prod (t - r)
        let mut c = vec![mpf(p, 1.0)];
        for r in roots {
            let mut next = vec![zero(p); c.len() + 1];
            for (j, cj) in c.iter().enumerate() {
                next[j + 1] += cj;
                next[j] -= Float::with_val(p, cj * r);
            }
            c = next;
        }
        let mut found: Vec<f64> = polynomial_roots(&c, 500)
            .unwrap()
            .iter()
            .map(|z| {
                assert!(z.im.to_f64().abs() < 1e-40);
                z.re.to_f64()
            })
            .collect();
        found.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut want = roots.to_vec();
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (f, w) in found.iter().zip(want) {
            assert!(((f - w) / w).abs() < 1e-14, "{f} vs {w}");
        }
    }

    #[test]
    fn complex_roots_are_found() {
        let p = 128;
        // t^2 + 1
        let c = vec![mpf(p, 1.0), zero(p), mpf(p, 1.0)];
        let r = polynomial_roots(&c, 200).unwrap();
        for z in r {
            assert!(z.re.to_f64().abs() < 1e-30);
            assert!((z.im.to_f64().abs() - 1.0).abs() < 1e-30);
        }
    }
}

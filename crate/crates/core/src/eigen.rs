//! Eigenvalues of 3x3 linear parts: exact via the characteristic polynomial
//! and rational roots when possible, floating point otherwise.

use nalgebra::{DMatrix, Matrix3};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::field::RationalMatrix3;
use crate::rational::{self, to_f64, Q};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
    /// Exact real part, when known.
    #[serde(with = "rational::serde_q_opt", default)]
    pub re_exact: Option<Q>,
}

impl Eigenvalue {
    pub fn real(x: f64) -> Self {
        Self { re: x, im: 0.0, re_exact: None }
    }

    pub fn exact(q: Q) -> Self {
        Self { re: to_f64(&q), im: 0.0, re_exact: Some(q) }
    }

    pub fn is_real(&self) -> bool {
        self.im == 0.0
    }

    /// Exact real eigenvalue, if this is one.
    pub fn as_exact_real(&self) -> Option<&Q> {
        if self.is_real() {
            self.re_exact.as_ref()
        } else {
            None
        }
    }

    pub fn sign(&self) -> i8 {
        if let Some(q) = &self.re_exact {
            return if q.is_zero() {
                0
            } else if q.is_positive() {
                1
            } else {
                -1
            };
        }
        if self.re > 0.0 {
            1
        } else if self.re < 0.0 {
            -1
        } else {
            0
        }
    }
}

fn sort_eigs(v: &mut [Eigenvalue]) {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// Roots of `a x^2 + b x + c` (float), complex pairs as `(re, ±im)`.
fn quadratic_f64(a: f64, b: f64, c: f64) -> [(f64, f64); 2] {
    let disc = b * b - 4.0 * a * c;
    if disc >= 0.0 {
        let s = disc.sqrt();
        // Stable form avoiding cancellation.
        let qv = -0.5 * (b + b.signum() * s);
        if qv == 0.0 {
            return [(0.0, 0.0), (0.0, 0.0)];
        }
        let (r1, r2) = (qv / a, c / qv);
        [(r1.min(r2), 0.0), (r1.max(r2), 0.0)]
    } else {
        let re = -b / (2.0 * a);
        let im = (-disc).sqrt() / (2.0 * a.abs());
        [(re, -im), (re, im)]
    }
}

fn exact_sqrt(q: &Q) -> Option<Q> {
    if q.is_negative() {
        return None;
    }
    let (n, d) = (q.numer(), q.denom());
    let (sn, sd) = (n.sqrt(), d.sqrt());
    if &(&sn * &sn) == n && &(&sd * &sd) == d {
        Some(Q::new(sn, sd))
    } else {
        None
    }
}

/// Roots of the quadratic `a x^2 + b x + c` with rational coefficients.
pub fn quadratic_roots(a: &Q, b: &Q, c: &Q) -> [Eigenvalue; 2] {
    let two = Q::from_integer(2.into());
    let disc = b * b - Q::from_integer(4.into()) * a * c;
    if let Some(s) = exact_sqrt(&disc) {
        let r1 = (-b - &s) / (&two * a);
        let r2 = (-b + &s) / (&two * a);
        let mut v = [Eigenvalue::exact(r1), Eigenvalue::exact(r2)];
        sort_eigs(&mut v);
        return v;
    }
    let re_exact = -b / (&two * a);
    let roots = quadratic_f64(to_f64(a), to_f64(b), to_f64(c));
    let complex = disc.is_negative();
    roots.map(|(re, im)| Eigenvalue { re, im, re_exact: if complex { Some(re_exact.clone()) } else { None } })
}

fn divisors(n: &BigInt) -> Option<Vec<BigInt>> {
    let n = n.abs().to_u64()?;
    if n > 1_000_000_000_000 {
        return None;
    }
    let mut out = Vec::new();
    let mut d = 1u64;
    while d * d <= n {
        if n % d == 0 {
            out.push(BigInt::from(d));
            if d * d != n {
                out.push(BigInt::from(n / d));
            }
        }
        d += 1;
    }
    Some(out)
}

fn horner(coeffs: &[Q], x: &Q) -> Q {
    coeffs.iter().rev().fold(Q::zero(), |acc, c| acc * x + c)
}

/// Divides by `(x - r)`; `coeffs` lowest degree first.
fn deflate(coeffs: &[Q], r: &Q) -> Vec<Q> {
    let n = coeffs.len() - 1;
    let mut out = vec![Q::zero(); n];
    let mut carry = Q::zero();
    for i in (0..n).rev() {
        carry = &coeffs[i + 1] + &carry * r;
        out[i] = carry.clone();
    }
    out
}

/// Rational roots with multiplicity, lowest-degree-first coefficients.
/// Returns the roots and the remaining cofactor. `None` if the coefficients
/// are too large for divisor enumeration.
pub fn rational_roots(coeffs: &[Q]) -> Option<(Vec<Q>, Vec<Q>)> {
    let mut c: Vec<Q> = coeffs.to_vec();
    while c.len() > 1 && c.last().is_some_and(|x| x.is_zero()) {
        c.pop();
    }
    let mut roots = Vec::new();
    while c.len() > 1 && c[0].is_zero() {
        roots.push(Q::zero());
        c.remove(0);
    }
    loop {
        if c.len() <= 1 {
            return Some((roots, c));
        }
        let lcm = c.iter().fold(BigInt::one(), |l, x| l.lcm(x.denom()));
        let ints: Vec<BigInt> = c.iter().map(|x| (x * Q::from_integer(lcm.clone())).to_integer()).collect();
        let ps = divisors(&ints[0])?;
        let qs = divisors(ints.last().unwrap())?;
        let mut found = None;
        'outer: for p in &ps {
            for qd in &qs {
                for sgn in [1, -1] {
                    let cand = Q::new(p * sgn, qd.clone());
                    if horner(&c, &cand).is_zero() {
                        found = Some(cand);
                        break 'outer;
                    }
                }
            }
        }
        match found {
            Some(r) => {
                c = deflate(&c, &r);
                roots.push(r);
            }
            None => return Some((roots, c)),
        }
    }
}

/// Real roots of a float polynomial (lowest degree first) via the companion
/// matrix.
pub fn real_roots_f64(coeffs: &[f64]) -> Vec<f64> {
    let mut c: Vec<f64> = coeffs.to_vec();
    while c.len() > 1 && c.last() == Some(&0.0) {
        c.pop();
    }
    let n = c.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![-c[0] / c[1]];
    }
    let lead = c[n];
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    for i in 0..n {
        m[(i, n - 1)] = -c[i] / lead;
    }
    let ev = m.complex_eigenvalues();
    let scale = ev.iter().fold(1.0f64, |s, z| s.max(z.norm()));
    let mut out: Vec<f64> = ev
        .iter()
        .filter(|z| z.im.abs() <= 1e-9 * scale)
        .map(|z| {
            // Polish with a few Newton steps on the original polynomial.
            let mut x = z.re;
            for _ in 0..8 {
                let (mut p, mut dp) = (0.0, 0.0);
                for a in c.iter().rev() {
                    dp = dp * x + p;
                    p = p * x + a;
                }
                if dp == 0.0 {
                    break;
                }
                let nx = x - p / dp;
                if !nx.is_finite() {
                    break;
                }
                x = nx;
            }
            x
        })
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

/// Eigenvalues of a float matrix.
pub fn eigenvalues_f64(m: [[f64; 3]; 3]) -> [Eigenvalue; 3] {
    let mat = Matrix3::from_fn(|i, j| m[i][j]);
    let ev = mat.complex_eigenvalues();
    let mut v = [0, 1, 2].map(|i| Eigenvalue { re: ev[i].re, im: ev[i].im, re_exact: None });
    for e in v.iter_mut() {
        if e.im.abs() <= 1e-12 * (1.0 + e.re.abs()) {
            e.im = 0.0;
        }
    }
    sort_eigs(&mut v);
    v
}

/// Eigenvalues of an exact matrix, exact whenever the characteristic
/// polynomial has a rational root.
pub fn eigenvalues_exact(m: &RationalMatrix3) -> [Eigenvalue; 3] {
    // det(tI - A) = t^3 - tr t^2 + s t - det
    let coeffs = vec![-m.det(), m.minor_sum(), -m.trace(), Q::one()];
    if let Some((roots, rest)) = rational_roots(&coeffs) {
        if !roots.is_empty() {
            let mut out: Vec<Eigenvalue> = roots.into_iter().map(Eigenvalue::exact).collect();
            if rest.len() == 3 {
                out.extend(quadratic_roots(&rest[2], &rest[1], &rest[0]));
            }
            let mut v: [Eigenvalue; 3] = out.try_into().expect("three roots");
            sort_eigs(&mut v);
            return v;
        }
    }
    eigenvalues_f64(m.to_f64())
}

/// Eigenvalues of a 2x2 float block `[[a, b], [c, d]]`.
pub fn eig2_f64(a: f64, b: f64, c: f64, d: f64) -> [Eigenvalue; 2] {
    let r = quadratic_f64(1.0, -(a + d), a * d - b * c);
    r.map(|(re, im)| Eigenvalue { re, im, re_exact: None })
}

/// Eigenvalues of a 2x2 exact block.
pub fn eig2_exact(a: &Q, b: &Q, c: &Q, d: &Q) -> [Eigenvalue; 2] {
    quadratic_roots(&Q::one(), &-(a + d), &(a * d - b * c))
}

/// Rank of an exact 3x3 matrix by fraction-free elimination.
pub fn rank_exact(m: &[[Q; 3]; 3]) -> usize {
    let mut a: Vec<Vec<Q>> = m.iter().map(|r| r.to_vec()).collect();
    let mut rank = 0;
    for col in 0..3 {
        let Some(piv) = (rank..3).find(|&r| !a[r][col].is_zero()) else { continue };
        a.swap(rank, piv);
        for r in 0..3 {
            if r != rank && !a[r][col].is_zero() {
                let f = &a[r][col] / &a[rank][col];
                for c in col..3 {
                    let v = &f * &a[rank][c];
                    a[r][c] -= v;
                }
            }
        }
        rank += 1;
    }
    rank
}

pub fn rank_f64(m: [[f64; 3]; 3], tol: f64) -> usize {
    let mat = Matrix3::from_fn(|i, j| m[i][j]);
    let sv = mat.singular_values();
    let smax = sv.max().max(1e-300);
    sv.iter().filter(|s| **s > tol * smax).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};

    #[test]
    fn diagonal_is_exact() {
        let m = RationalMatrix3::diag([qi(1), qi(-2), q(-3, 2)]);
        let e = eigenvalues_exact(&m);
        let ex: Vec<Q> = e.iter().map(|x| x.as_exact_real().unwrap().clone()).collect();
        assert_eq!(ex, vec![qi(-2), q(-3, 2), qi(1)]);
    }

    #[test]
    fn rotation_block_has_exact_real_part() {
        let m = RationalMatrix3([[qi(-1), qi(-1), qi(0)], [qi(1), qi(-1), qi(0)], [qi(0), qi(0), qi(-3)]]);
        let e = eigenvalues_exact(&m);
        assert_eq!(e[0].as_exact_real(), Some(&qi(-3)));
        assert_eq!(e[1].re_exact, Some(qi(-1)));
        assert!((e[1].im.abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn irrational_roots_fall_back_to_floats() {
        // t^3 - 2t: roots 0, ±sqrt 2
        let m = RationalMatrix3([[qi(0), qi(1), qi(0)], [qi(2), qi(0), qi(0)], [qi(0), qi(0), qi(0)]]);
        let e = eigenvalues_exact(&m);
        assert!((e[0].re + 2f64.sqrt()).abs() < 1e-14);
        assert_eq!(e[1].as_exact_real(), Some(&qi(0)));
        assert!(e[2].re_exact.is_none());
    }

    #[test]
    fn rational_roots_with_multiplicity() {
        // (x - 1/2)^2 (x + 3) = x^3 + 2x^2 - 11/4 x + 3/4
        let c = vec![q(3, 4), q(-11, 4), qi(2), qi(1)];
        let (mut r, rest) = rational_roots(&c).unwrap();
        r.sort();
        assert_eq!(r, vec![qi(-3), q(1, 2), q(1, 2)]);
        assert_eq!(rest.len(), 1);
    }

    #[test]
    fn companion_roots() {
        let r = real_roots_f64(&[-2.0, 0.0, 1.0]);
        assert!((r[0] + 2f64.sqrt()).abs() < 1e-14 && (r[1] - 2f64.sqrt()).abs() < 1e-14);
        assert!(real_roots_f64(&[1.0, 0.0, 1.0]).is_empty());
    }

    #[test]
    fn exact_rank() {
        let m = [[qi(1), qi(2), qi(3)], [qi(2), qi(4), qi(6)], [qi(0), qi(0), qi(1)]];
        assert_eq!(rank_exact(&m), 2);
        assert_eq!(rank_f64([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [0.0, 0.0, 1.0]], 1e-12), 2);
    }
}

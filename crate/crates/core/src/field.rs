//! Sparse trivariate polynomials and polynomial vector fields with exact
//! rational coefficients.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rational::{self, to_f64, Q};

/// Exponent triple `(ex, ey, ez)`, ordered graded-lex: lower total degree
/// first, ties broken lexicographically with larger `ex` first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Exp(pub [u32; 3]);

impl Exp {
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }
}

impl Ord for Exp {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Exp {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Sparse polynomial in `x, y, z`. Zero coefficients are never stored.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct Poly {
    terms: BTreeMap<Exp, Q>,
}

impl Poly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Q) -> Self {
        Self::monomial(c, [0, 0, 0])
    }

    pub fn monomial(c: Q, e: [u32; 3]) -> Self {
        let mut p = Self::zero();
        p.add_term(Exp(e), c);
        p
    }

    pub fn var(i: usize) -> Self {
        let mut e = [0; 3];
        e[i] = 1;
        Self::monomial(Q::one(), e)
    }

    /// Builds a polynomial from `(coefficient, exponents)` pairs, merging
    /// repeated exponents and dropping zeros.
    pub fn from_terms<I: IntoIterator<Item = (Q, [u32; 3])>>(terms: I) -> Self {
        let mut p = Self::zero();
        for (c, e) in terms {
            p.add_term(Exp(e), c);
        }
        p
    }

    pub fn add_term(&mut self, e: Exp, c: Q) {
        if c.is_zero() {
            return;
        }
        let remove = {
            let slot = self.terms.entry(e).or_insert_with(Q::zero);
            *slot += c;
            slot.is_zero()
        };
        if remove {
            self.terms.remove(&e);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exp, &Q)> {
        self.terms.iter()
    }

    pub fn coeff(&self, e: [u32; 3]) -> Q {
        self.terms.get(&Exp(e)).cloned().unwrap_or_else(Q::zero)
    }

    pub fn min_degree(&self) -> Option<u32> {
        self.terms.keys().map(Exp::degree).min()
    }

    pub fn max_degree(&self) -> Option<u32> {
        self.terms.keys().map(Exp::degree).max()
    }

    pub fn scale(&self, c: &Q) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self { terms: self.terms.iter().map(|(e, v)| (*e, v * c)).collect() }
    }

    pub fn derivative(&self, i: usize) -> Self {
        let mut out = Self::zero();
        for (e, c) in &self.terms {
            if e.0[i] > 0 {
                let mut f = e.0;
                f[i] -= 1;
                out.add_term(Exp(f), c * Q::from_integer(e.0[i].into()));
            }
        }
        out
    }

    pub fn eval_q(&self, p: &[Q; 3]) -> Q {
        let mut acc = Q::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for k in 0..3 {
                if e.0[k] > 0 {
                    t *= num_traits::pow(p[k].clone(), e.0[k] as usize);
                }
            }
            acc += t;
        }
        acc
    }

    /// Exact evaluation at the rational images of the float inputs, rounded
    /// once at the end.
    pub fn eval_exact_f64(&self, p: [f64; 3]) -> f64 {
        let pq: [Q; 3] = p.map(|v| Q::from_float(v).unwrap_or_else(Q::zero));
        to_f64(&self.eval_q(&pq))
    }

    pub fn eval_f64(&self, p: [f64; 3]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| to_f64(c) * p[0].powi(e.0[0] as i32) * p[1].powi(e.0[1] as i32) * p[2].powi(e.0[2] as i32))
            .sum()
    }

    /// True when `u_i^k` divides the polynomial.
    pub fn divisible_by_var(&self, i: usize, k: u32) -> bool {
        self.terms.keys().all(|e| e.0[i] >= k)
    }

    pub fn div_var(&self, i: usize, k: u32) -> Option<Self> {
        if !self.divisible_by_var(i, k) {
            return None;
        }
        Some(Self {
            terms: self
                .terms
                .iter()
                .map(|(e, c)| {
                    let mut f = e.0;
                    f[i] -= k;
                    (Exp(f), c.clone())
                })
                .collect(),
        })
    }

    /// Restriction to the plane `u_i = 0`.
    pub fn on_plane(&self, i: usize) -> Self {
        Self { terms: self.terms.iter().filter(|(e, _)| e.0[i] == 0).map(|(e, c)| (*e, c.clone())).collect() }
    }

    /// `p(c + u)` as a polynomial in `u`.
    pub fn translate(&self, c: &[Q; 3]) -> Self {
        if c.iter().all(Zero::is_zero) {
            return self.clone();
        }
        let mut out = Self::zero();
        for (e, coef) in &self.terms {
            // Expand each factor (c_k + u_k)^e_k by the binomial theorem.
            let mut partial: Vec<(Q, [u32; 3])> = vec![(coef.clone(), [0, 0, 0])];
            for k in 0..3 {
                let n = e.0[k];
                if n == 0 {
                    continue;
                }
                let mut next = Vec::new();
                let mut binom = Q::one();
                for j in 0..=n {
                    if j > 0 {
                        binom = binom * Q::from_integer((n - j + 1).into()) / Q::from_integer(j.into());
                    }
                    let cpow = num_traits::pow(c[k].clone(), (n - j) as usize);
                    if cpow.is_zero() {
                        continue;
                    }
                    let factor = &binom * cpow;
                    for (pc, pe) in &partial {
                        let mut ne = *pe;
                        ne[k] += j;
                        next.push((pc * &factor, ne));
                    }
                }
                partial = next;
            }
            for (pc, pe) in partial {
                out.add_term(Exp(pe), pc);
            }
        }
        out
    }

    /// Directional blow-up substitution `u_a -> s X_a`, `u_j -> X_a X_j`.
    pub fn blowup_substitute(&self, axis: usize, sign: i8) -> Self {
        let mut out = Self::zero();
        for (e, c) in &self.terms {
            let mut f = e.0;
            f[axis] = e.degree();
            let c = if sign < 0 && e.0[axis] % 2 == 1 { -c.clone() } else { c.clone() };
            out.add_term(Exp(f), c);
        }
        out
    }

    pub fn max_abs_coeff(&self) -> Q {
        self.terms.values().map(|c| c.abs()).max().unwrap_or_else(Q::zero)
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(*e, c.clone());
        }
        out
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(*e, -c.clone());
        }
        out
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(&-Q::one())
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &rhs.terms {
                let e = [e1.0[0] + e2.0[0], e1.0[1] + e2.0[1], e1.0[2] + e2.0[2]];
                out.add_term(Exp(e), c1 * c2);
            }
        }
        out
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let names = ["x", "y", "z"];
        for (n, (e, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            if n > 0 {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            } else if neg {
                write!(f, "-")?;
            }
            let a = c.abs();
            let mono: Vec<String> = (0..3)
                .filter(|&k| e.0[k] > 0)
                .map(|k| if e.0[k] == 1 { names[k].to_string() } else { format!("{}^{}", names[k], e.0[k]) })
                .collect();
            if mono.is_empty() {
                write!(f, "{}", rational::to_string(&a))?;
            } else if a.is_one() {
                write!(f, "{}", mono.join("*"))?;
            } else {
                write!(f, "{}*{}", rational::to_string(&a), mono.join("*"))?;
            }
        }
        Ok(())
    }
}

impl Serialize for Poly {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<(String, u32, u32, u32)> =
            self.terms.iter().map(|(e, c)| (rational::to_string(c), e.0[0], e.0[1], e.0[2])).collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Poly {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<(String, u32, u32, u32)>::deserialize(d)?;
        let mut p = Poly::zero();
        for (c, ex, ey, ez) in v {
            let c = rational::parse(&c).ok_or_else(|| serde::de::Error::custom(format!("bad coefficient {c:?}")))?;
            p.add_term(Exp([ex, ey, ez]), c);
        }
        Ok(p)
    }
}

/// 3x3 matrix of exact rationals.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RationalMatrix3(pub [[Q; 3]; 3]);

impl RationalMatrix3 {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn diag(d: [Q; 3]) -> Self {
        let mut m = Self::zero();
        for (i, v) in d.into_iter().enumerate() {
            m.0[i][i] = v;
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> &Q {
        &self.0[i][j]
    }

    pub fn to_f64(&self) -> [[f64; 3]; 3] {
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = to_f64(&self.0[i][j]);
            }
        }
        out
    }

    pub fn trace(&self) -> Q {
        &self.0[0][0] + &self.0[1][1] + &self.0[2][2]
    }

    pub fn det(&self) -> Q {
        let m = &self.0;
        &m[0][0] * (&m[1][1] * &m[2][2] - &m[1][2] * &m[2][1]) - &m[0][1] * (&m[1][0] * &m[2][2] - &m[1][2] * &m[2][0])
            + &m[0][2] * (&m[1][0] * &m[2][1] - &m[1][1] * &m[2][0])
    }

    /// Sum of principal 2x2 minors.
    pub fn minor_sum(&self) -> Q {
        let m = &self.0;
        (&m[0][0] * &m[1][1] - &m[0][1] * &m[1][0])
            + (&m[0][0] * &m[2][2] - &m[0][2] * &m[2][0])
            + (&m[1][1] * &m[2][2] - &m[1][2] * &m[2][1])
    }
}

/// Polynomial vector field `a ∂x + b ∂y + c ∂z`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PolyField3 {
    pub components: [Poly; 3],
}

impl PolyField3 {
    pub fn new(components: [Poly; 3]) -> Self {
        Self { components }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// Linear field `x' = A x`.
    pub fn linear(a: [[Q; 3]; 3]) -> Self {
        let comps = a.map(|row| {
            Poly::from_terms(row.into_iter().enumerate().map(|(j, c)| {
                let mut e = [0; 3];
                e[j] = 1;
                (c, e)
            }))
        });
        Self::new(comps)
    }

    /// Linear field from small integer entries.
    pub fn linear_i(a: [[i64; 3]; 3]) -> Self {
        Self::linear(a.map(|row| row.map(rational::qi)))
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(Poly::is_zero)
    }

    pub fn eval(&self, p: [f64; 3]) -> [f64; 3] {
        [
            self.components[0].eval_exact_f64(p),
            self.components[1].eval_exact_f64(p),
            self.components[2].eval_exact_f64(p),
        ]
    }

    pub fn eval_q(&self, p: &[Q; 3]) -> [Q; 3] {
        [self.components[0].eval_q(p), self.components[1].eval_q(p), self.components[2].eval_q(p)]
    }

    pub fn jacobian_at(&self, p: &[Q; 3]) -> RationalMatrix3 {
        let mut m = RationalMatrix3::zero();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = self.components[i].derivative(j).eval_q(p);
            }
        }
        m
    }

    /// Minimal total degree over every nonzero monomial of every component.
    pub fn vanishing_order(&self) -> Result<u32> {
        self.components.iter().filter_map(Poly::min_degree).min().ok_or(Error::ZeroField)
    }

    pub fn max_degree(&self) -> u32 {
        self.components.iter().filter_map(Poly::max_degree).max().unwrap_or(0)
    }

    pub fn scale(&self, c: &Q) -> Self {
        Self::new([self.components[0].scale(c), self.components[1].scale(c), self.components[2].scale(c)])
    }

    /// Homogeneous part of total degree `d`.
    pub fn homogeneous_part(&self, d: u32) -> Self {
        let part =
            |p: &Poly| Poly::from_terms(p.terms().filter(|(e, _)| e.degree() == d).map(|(e, c)| (c.clone(), e.0)));
        Self::new([part(&self.components[0]), part(&self.components[1]), part(&self.components[2])])
    }

    pub fn translate(&self, c: &[Q; 3]) -> Self {
        Self::new([self.components[0].translate(c), self.components[1].translate(c), self.components[2].translate(c)])
    }

    pub fn compile(&self) -> FloatField {
        FloatField::new(self)
    }
}

impl Add for &PolyField3 {
    type Output = PolyField3;
    fn add(self, rhs: &PolyField3) -> PolyField3 {
        PolyField3::new([
            &self.components[0] + &rhs.components[0],
            &self.components[1] + &rhs.components[1],
            &self.components[2] + &rhs.components[2],
        ])
    }
}

impl fmt::Display for PolyField3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.components[0], self.components[1], self.components[2])
    }
}

/// Float-coefficient copy of a field for fast evaluation inside integrators.
#[derive(Debug, Clone, Default)]
pub struct FloatField {
    terms: [Vec<(f64, [u32; 3])>; 3],
    max_exp: [u32; 3],
}

impl FloatField {
    pub fn new(f: &PolyField3) -> Self {
        let mut max_exp = [0; 3];
        let terms = [0, 1, 2].map(|i| {
            f.components[i]
                .terms()
                .map(|(e, c)| {
                    for k in 0..3 {
                        max_exp[k] = max_exp[k].max(e.0[k]);
                    }
                    (to_f64(c), e.0)
                })
                .collect::<Vec<_>>()
        });
        Self { terms, max_exp }
    }

    fn powers(&self, p: [f64; 3]) -> [Vec<f64>; 3] {
        [0, 1, 2].map(|k| {
            let mut v = Vec::with_capacity(self.max_exp[k] as usize + 1);
            let mut acc = 1.0;
            for _ in 0..=self.max_exp[k] {
                v.push(acc);
                acc *= p[k];
            }
            v
        })
    }

    pub fn eval(&self, p: [f64; 3]) -> [f64; 3] {
        let pw = self.powers(p);
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.terms[i]
                .iter()
                .map(|(c, e)| c * pw[0][e[0] as usize] * pw[1][e[1] as usize] * pw[2][e[2] as usize])
                .sum();
        }
        out
    }

    pub fn jacobian(&self, p: [f64; 3]) -> [[f64; 3]; 3] {
        let pw = self.powers(p);
        let mut j = [[0.0; 3]; 3];
        for i in 0..3 {
            for (c, e) in &self.terms[i] {
                for k in 0..3 {
                    if e[k] == 0 {
                        continue;
                    }
                    let mut t = c * e[k] as f64;
                    for m in 0..3 {
                        let ex = if m == k { e[m] - 1 } else { e[m] };
                        t *= pw[m][ex as usize];
                    }
                    j[i][k] += t;
                }
            }
        }
        j
    }
}

//! Finite complex Grassmann algebra.
//!
//! Elements are sparse maps from generator subsets (bitmasks) to complex
//! coefficients. Generators inside a stored monomial are in ascending index
//! order. Generators come in pairs `(2p, 2p + 1)`: the odd index is the
//! conjugate of the even one.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// After a product, coefficients at or below this fraction of
/// max|a|·max|b| are dropped. Relative, so small-scale operands keep their
/// souls.
pub const PRUNE_TOL: f64 = 1e-14;

/// Largest supported generator count (masks are `u32`).
pub const MAX_GENERATORS: usize = 32;

// dense accumulation is used up to this many generators
const DENSE_LIMIT: usize = 20;

#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GrassmannJson", into = "GrassmannJson")]
pub struct GrassmannElement {
    n: usize,
    terms: Vec<(u32, C64)>,
}

/// Sign of moving the monomial `b` to the right of `a` into canonical order:
/// parity of the pairs (i in a, j in b) with i > j.
#[inline]
pub fn merge_sign(a: u32, b: u32) -> bool {
    let mut odd = 0u32;
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        odd ^= (a.checked_shr(j + 1).unwrap_or(0)).count_ones() & 1;
        rest &= rest - 1;
    }
    odd == 1
}

/// Canonical mask and sign of an ordered product of generators, or `None`
/// when a generator repeats.
fn ordered_product(gens: &[usize]) -> Option<(u32, bool)> {
    let mut mask = 0u32;
    let mut neg = false;
    for &g in gens {
        let bit = 1u32 << g;
        if mask & bit != 0 {
            return None;
        }
        neg ^= merge_sign(mask, bit);
        mask |= bit;
    }
    Some((mask, neg))
}

fn bits(mut m: u32) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if m == 0 {
            None
        } else {
            let j = m.trailing_zeros() as usize;
            m &= m - 1;
            Some(j)
        }
    })
}

thread_local! {
    static SCRATCH: RefCell<(Vec<C64>, Vec<u32>)> = const { RefCell::new((Vec::new(), Vec::new())) };
}

impl GrassmannElement {
    pub fn zero(n: usize) -> Self {
        assert!(n <= MAX_GENERATORS, "at most {MAX_GENERATORS} generators");
        Self { n, terms: Vec::new() }
    }

    pub fn scalar(n: usize, c: impl Into<C64>) -> Self {
        let c = c.into();
        let mut z = Self::zero(n);
        if c != C64::new(0.0, 0.0) {
            z.terms.push((0, c));
        }
        z
    }

    pub fn one(n: usize) -> Self {
        Self::scalar(n, 1.0)
    }

    /// Degree-one basis element for generator `index`.
    pub fn make_generator(index: usize, total: usize) -> Result<Self> {
        if index >= total || total > MAX_GENERATORS {
            return Err(Error::GeneratorOutOfRange { index, total });
        }
        Ok(Self { n: total, terms: vec![(1u32 << index, C64::new(1.0, 0.0))] })
    }

    /// Builds an element from arbitrary (mask, coefficient) pairs, merging
    /// duplicates and dropping exact zeros.
    pub fn from_terms(n: usize, terms: impl IntoIterator<Item = (u32, C64)>) -> Result<Self> {
        if n > MAX_GENERATORS {
            return Err(Error::OutOfRange(format!("{n} generators")));
        }
        let mut map: BTreeMap<u32, C64> = BTreeMap::new();
        for (m, c) in terms {
            if n < 32 && m >> n != 0 {
                return Err(Error::OutOfRange(format!("mask {m:#b} uses generators beyond {n}")));
            }
            *map.entry(m).or_default() += c;
        }
        Ok(Self { n, terms: map.into_iter().filter(|(_, c)| c.norm_sqr() > 0.0).collect() })
    }

    pub fn num_generators(&self) -> usize {
        self.n
    }

    /// Sorted (mask, coefficient) pairs.
    pub fn terms(&self) -> &[(u32, C64)] {
        &self.terms
    }

    pub fn coefficient(&self, mask: u32) -> C64 {
        match self.terms.binary_search_by_key(&mask, |t| t.0) {
            Ok(i) => self.terms[i].1,
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn body(&self) -> C64 {
        self.coefficient(0)
    }

    pub fn soul(&self) -> Self {
        Self { n: self.n, terms: self.terms.iter().copied().filter(|t| t.0 != 0).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest coefficient magnitude.
    pub fn max_abs(&self) -> f64 {
        self.terms.iter().map(|t| t.1.norm()).fold(0.0, f64::max)
    }

    /// True when no term of odd degree is present.
    pub fn is_even(&self) -> bool {
        self.terms.iter().all(|t| t.0.count_ones() % 2 == 0)
    }

    /// True when no term of even degree is present.
    pub fn is_odd(&self) -> bool {
        self.terms.iter().all(|t| t.0.count_ones() % 2 == 1)
    }

    /// Part of the element made of monomials with exactly `d` generators.
    pub fn grade(&self, d: u32) -> Self {
        self.filter(|m| m.count_ones() == d)
    }

    pub fn filter(&self, keep: impl Fn(u32) -> bool) -> Self {
        Self { n: self.n, terms: self.terms.iter().copied().filter(|t| keep(t.0)).collect() }
    }

    /// Drops coefficients with magnitude `<= tol`.
    pub fn pruned(mut self, tol: f64) -> Self {
        self.terms.retain(|t| t.1.norm() > tol);
        self
    }

    pub fn scale(&self, c: impl Into<C64>) -> Self {
        let c = c.into();
        if c == C64::new(0.0, 0.0) {
            return Self::zero(self.n);
        }
        Self { n: self.n, terms: self.terms.iter().map(|&(m, x)| (m, x * c)).collect() }
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::GeneratorMismatch(self.n, other.n));
        }
        Ok(())
    }

    fn merge(&self, other: &Self, sign: f64) -> Self {
        let (a, b) = (&self.terms, &other.terms);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
                out.push(a[i]);
                i += 1;
            } else if i == a.len() || b[j].0 < a[i].0 {
                out.push((b[j].0, b[j].1 * sign));
                j += 1;
            } else {
                let c = a[i].1 + b[j].1 * sign;
                if c.norm_sqr() > 0.0 {
                    out.push((a[i].0, c));
                }
                i += 1;
                j += 1;
            }
        }
        Self { n: self.n, terms: out }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(self.merge(other, 1.0))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(self.merge(other, -1.0))
    }

    /// Associative, graded-commutative product.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        if self.terms.is_empty() || other.terms.is_empty() {
            return Ok(Self::zero(self.n));
        }
        let tol = PRUNE_TOL * self.max_abs() * other.max_abs();
        if self.terms.len() == 1 && self.terms[0].0 == 0 {
            return Ok(other.scale(self.terms[0].1).pruned(tol));
        }
        if other.terms.len() == 1 && other.terms[0].0 == 0 {
            return Ok(self.scale(other.terms[0].1).pruned(tol));
        }
        if self.n <= DENSE_LIMIT {
            return Ok(self.multiply_dense(other, tol));
        }
        let mut map: BTreeMap<u32, C64> = BTreeMap::new();
        for &(ma, ca) in &self.terms {
            for &(mb, cb) in &other.terms {
                if ma & mb == 0 {
                    let c = if merge_sign(ma, mb) { -ca * cb } else { ca * cb };
                    *map.entry(ma | mb).or_default() += c;
                }
            }
        }
        Ok(Self { n: self.n, terms: map.into_iter().filter(|t| t.1.norm() > tol).collect() })
    }

    fn multiply_dense(&self, other: &Self, tol: f64) -> Self {
        SCRATCH.with(|cell| {
            let mut guard = cell.borrow_mut();
            let (acc, touched) = &mut *guard;
            let size = 1usize << self.n;
            if acc.len() < size {
                acc.resize(size, C64::new(0.0, 0.0));
            }
            touched.clear();
            for &(ma, ca) in &self.terms {
                for &(mb, cb) in &other.terms {
                    if ma & mb != 0 {
                        continue;
                    }
                    let c = if merge_sign(ma, mb) { -ca * cb } else { ca * cb };
                    let slot = &mut acc[(ma | mb) as usize];
                    if *slot == C64::new(0.0, 0.0) {
                        touched.push(ma | mb);
                    }
                    *slot += c;
                }
            }
            touched.sort_unstable();
            touched.dedup();
            let mut terms = Vec::with_capacity(touched.len());
            for &m in touched.iter() {
                let c = acc[m as usize];
                acc[m as usize] = C64::new(0.0, 0.0);
                if c.norm() > tol {
                    terms.push((m, c));
                }
            }
            Self { n: self.n, terms }
        })
    }

    fn partner(&self, g: usize) -> usize {
        // with an odd count the last generator has no partner and is real
        if g ^ 1 < self.n { g ^ 1 } else { g }
    }

    /// Order-reversing antilinear involution: each generator maps to its
    /// paired conjugate and products are reversed.
    pub fn conjugate(&self) -> Self {
        let terms = self.terms.iter().filter_map(|&(m, c)| {
            let gens: Vec<usize> = bits(m).map(|g| self.partner(g)).collect::<Vec<_>>().into_iter().rev().collect();
            let (mask, neg) = ordered_product(&gens)?;
            Some((mask, if neg { -c.conj() } else { c.conj() }))
        });
        Self::from_terms(self.n, terms).expect("conjugate keeps generator range")
    }

    /// Multiplicative antilinear conjugation of the second kind:
    /// `ξ -> ξ*`, `ξ* -> -ξ`. Squares to the parity automorphism, so it is
    /// an involution on even elements only. This is the conjugation under
    /// which the supergroup's superadjoint is defined.
    pub fn conjugate_graded(&self) -> Self {
        let terms = self.terms.iter().filter_map(|&(m, c)| {
            let gens: Vec<usize> = bits(m).map(|g| self.partner(g)).collect();
            let flips = bits(m).filter(|&g| g % 2 == 1 && self.partner(g) != g).count();
            let (mask, neg) = ordered_product(&gens)?;
            let c = c.conj();
            Some((mask, if neg ^ (flips % 2 == 1) { -c } else { c }))
        });
        Self::from_terms(self.n, terms).expect("conjugate keeps generator range")
    }

    /// `(-1)^deg` applied termwise.
    pub fn parity_flip(&self) -> Self {
        Self {
            n: self.n,
            terms: self.terms.iter().map(|&(m, c)| (m, if m.count_ones() % 2 == 1 { -c } else { c })).collect(),
        }
    }

    /// Multiplicative inverse via the nilpotent geometric series.
    pub fn invert(&self) -> Result<Self> {
        let b = self.body();
        if b.norm() == 0.0 {
            return Err(Error::NotInvertible);
        }
        let x = self.soul().scale(-1.0 / b);
        let mut term = Self::one(self.n);
        let mut sum = Self::one(self.n);
        for _ in 0..=self.n {
            term = term.multiply(&x)?;
            if term.is_zero() {
                break;
            }
            sum = sum.merge(&term, 1.0);
        }
        Ok(sum.scale(1.0 / b))
    }

    /// Taylor expansion of `f` about the body. `deriv(k, body)` returns the
    /// k-th derivative at the body, or `None` when undefined.
    pub fn apply_analytic(&self, deriv: impl Fn(usize, C64) -> Option<C64>) -> Result<Self> {
        if !self.is_even() {
            return Err(Error::OddContent);
        }
        let b = self.body();
        let s = self.soul();
        let f0 = deriv(0, b).ok_or(Error::UndefinedAtBody(b.re))?;
        let mut sum = Self::scalar(self.n, f0);
        let mut power = Self::one(self.n);
        let mut fact = 1.0;
        for k in 1..=self.n / 2 {
            power = power.multiply(&s)?;
            if power.is_zero() {
                break;
            }
            fact *= k as f64;
            let fk = deriv(k, b).ok_or(Error::UndefinedAtBody(b.re))?;
            sum = sum.merge(&power.scale(fk / fact), 1.0);
        }
        let tol = PRUNE_TOL * sum.max_abs();
        Ok(sum.pruned(tol))
    }

    /// `a^p` for an even element with non-zero body (principal branch).
    pub fn powf(&self, p: f64) -> Result<Self> {
        self.apply_analytic(|k, b| {
            if b.norm() == 0.0 {
                return None;
            }
            let mut c = 1.0;
            for j in 0..k {
                c *= p - j as f64;
            }
            Some(b.powf(p - k as f64) * c)
        })
    }

    /// Principal square root of an even element with non-zero body.
    pub fn sqrt(&self) -> Result<Self> {
        self.powf(0.5)
    }

    /// Berezin integral over the listed generator pairs `p` (generators
    /// `2p`, `2p + 1`), with `∫ dξ* dξ (ξ ξ*) = 1`.
    pub fn berezin_integrate(&self, pairs: &[usize]) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for &p in pairs {
            if 2 * p + 1 >= self.n {
                return Err(Error::GeneratorOutOfRange { index: 2 * p + 1, total: self.n });
            }
            if !seen.insert(p) {
                return Err(Error::DuplicatePair(p));
            }
        }
        let mut cur = self.clone();
        for &p in pairs {
            cur = cur.left_derivative(2 * p).left_derivative(2 * p + 1);
        }
        Ok(cur)
    }

    /// Left derivative with respect to generator `g`.
    pub fn left_derivative(&self, g: usize) -> Self {
        let bit = 1u32 << g;
        let terms = self.terms.iter().filter(|t| t.0 & bit != 0).map(|&(m, c)| {
            let below = (m & (bit - 1)).count_ones();
            (m ^ bit, if below % 2 == 1 { -c } else { c })
        });
        Self::from_terms(self.n, terms).expect("derivative keeps generator range")
    }
}

impl fmt::Debug for GrassmannElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({:.6}{:+.6}i)", c.re, c.im)?;
            for g in bits(*m) {
                if g % 2 == 0 {
                    write!(f, "·ξ{}", g / 2)?;
                } else {
                    write!(f, "·ξ{}*", g / 2)?;
                }
            }
        }
        Ok(())
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $body:expr) => {
        impl $tr<&GrassmannElement> for &GrassmannElement {
            type Output = GrassmannElement;
            fn $method(self, rhs: &GrassmannElement) -> GrassmannElement {
                #[allow(clippy::redundant_closure_call)]
                ($body)(self, rhs)
            }
        }
        impl $tr<GrassmannElement> for GrassmannElement {
            type Output = GrassmannElement;
            fn $method(self, rhs: GrassmannElement) -> GrassmannElement {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&GrassmannElement> for GrassmannElement {
            type Output = GrassmannElement;
            fn $method(self, rhs: &GrassmannElement) -> GrassmannElement {
                (&self).$method(rhs)
            }
        }
        impl $tr<GrassmannElement> for &GrassmannElement {
            type Output = GrassmannElement;
            fn $method(self, rhs: GrassmannElement) -> GrassmannElement {
                self.$method(&rhs)
            }
        }
    };
}

binop!(Add, add, |a: &GrassmannElement, b: &GrassmannElement| a.try_add(b).expect("generator count"));
binop!(Sub, sub, |a: &GrassmannElement, b: &GrassmannElement| a.try_sub(b).expect("generator count"));
binop!(Mul, mul, |a: &GrassmannElement, b: &GrassmannElement| a.multiply(b).expect("generator count"));

impl Mul<C64> for &GrassmannElement {
    type Output = GrassmannElement;
    fn mul(self, rhs: C64) -> GrassmannElement {
        self.scale(rhs)
    }
}

impl Mul<C64> for GrassmannElement {
    type Output = GrassmannElement;
    fn mul(self, rhs: C64) -> GrassmannElement {
        self.scale(rhs)
    }
}

impl Mul<f64> for &GrassmannElement {
    type Output = GrassmannElement;
    fn mul(self, rhs: f64) -> GrassmannElement {
        self.scale(rhs)
    }
}

impl Mul<f64> for GrassmannElement {
    type Output = GrassmannElement;
    fn mul(self, rhs: f64) -> GrassmannElement {
        self.scale(rhs)
    }
}

impl Neg for &GrassmannElement {
    type Output = GrassmannElement;
    fn neg(self) -> GrassmannElement {
        self.scale(-1.0)
    }
}

impl Neg for GrassmannElement {
    type Output = GrassmannElement;
    fn neg(self) -> GrassmannElement {
        self.scale(-1.0)
    }
}

impl AddAssign<&GrassmannElement> for GrassmannElement {
    fn add_assign(&mut self, rhs: &GrassmannElement) {
        *self = self.try_add(rhs).expect("generator count");
    }
}

impl SubAssign<&GrassmannElement> for GrassmannElement {
    fn sub_assign(&mut self, rhs: &GrassmannElement) {
        *self = self.try_sub(rhs).expect("generator count");
    }
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    mask: u32,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct GrassmannJson {
    generators: usize,
    terms: Vec<TermJson>,
}

impl From<GrassmannElement> for GrassmannJson {
    fn from(g: GrassmannElement) -> Self {
        Self {
            generators: g.n,
            terms: g.terms.iter().map(|&(mask, c)| TermJson { mask, re: c.re, im: c.im }).collect(),
        }
    }
}

impl TryFrom<GrassmannJson> for GrassmannElement {
    type Error = Error;
    fn try_from(j: GrassmannJson) -> Result<Self> {
        GrassmannElement::from_terms(j.generators, j.terms.into_iter().map(|t| (t.mask, C64::new(t.re, t.im))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(i: usize, n: usize) -> GrassmannElement {
        GrassmannElement::make_generator(i, n).unwrap()
    }

    #[test]
    fn generator_nilpotent_and_anticommuting() {
        assert!((g(0, 2) * g(0, 2)).is_zero());
        assert!((g(0, 2) * g(1, 2) + g(1, 2) * g(0, 2)).is_zero());
        assert_eq!(g(0, 2).body(), C64::new(0.0, 0.0));
        assert!(GrassmannElement::make_generator(2, 2).is_err());
    }

    #[test]
    fn nilpotent_square_cancels() {
        let one = GrassmannElement::one(2);
        let q = g(0, 2) * g(1, 2);
        assert_eq!((&one + &q) * (&one - &q), one);
        let six = GrassmannElement::scalar(2, 2.0) * GrassmannElement::scalar(2, 3.0);
        assert_eq!(six.body(), C64::new(6.0, 0.0));
    }

    #[test]
    fn conjugation_examples() {
        assert_eq!(g(0, 4).conjugate(), g(1, 4));
        let i1 = GrassmannElement::scalar(4, C64::new(0.0, 1.0));
        assert_eq!(i1.conjugate(), GrassmannElement::scalar(4, C64::new(0.0, -1.0)));
        // conj(ξ1 ξ2) = ξ2* ξ1*
        assert_eq!((g(0, 4) * g(2, 4)).conjugate(), g(3, 4) * g(1, 4));
        let a = g(0, 4) * g(3, 4) + g(1, 4).scale(C64::new(0.5, 2.0));
        assert_eq!(a.conjugate().conjugate(), a);
    }

    #[test]
    fn graded_conjugation() {
        assert_eq!(g(0, 2).conjugate_graded(), g(1, 2));
        assert_eq!(g(1, 2).conjugate_graded(), -g(0, 2));
        let x = g(0, 4) * g(3, 4) + GrassmannElement::scalar(4, C64::new(1.0, 2.0));
        assert_eq!(x.conjugate_graded().conjugate_graded(), x);
        // |ξ|² is real and identical under both conjugations
        let m1 = g(0, 2).conjugate() * g(0, 2);
        let m2 = g(0, 2).conjugate_graded() * g(0, 2);
        assert_eq!(m1, m2);
        assert_eq!(m1.body(), C64::new(0.0, 0.0));
    }

    #[test]
    fn inverse_and_sqrt_examples() {
        assert_eq!(GrassmannElement::scalar(2, 2.0).invert().unwrap().body(), C64::new(0.5, 0.0));
        let q = g(0, 2) * g(1, 2);
        let one = GrassmannElement::one(2);
        assert_eq!((&one + &q).invert().unwrap(), &one - &q);
        assert!(GrassmannElement::zero(2).invert().is_err());
        assert_eq!(GrassmannElement::scalar(2, 4.0).sqrt().unwrap(), GrassmannElement::scalar(2, 2.0));
        let qs = g(1, 2) * g(0, 2);
        assert_eq!((&one + &qs).sqrt().unwrap(), &one + &qs.scale(0.5));
        assert_eq!(g(0, 2).sqrt(), Err(Error::OddContent));
    }

    #[test]
    fn berezin_examples() {
        let n = 2;
        let one = GrassmannElement::one(n);
        let q = g(0, n) * g(1, n);
        assert_eq!(q.berezin_integrate(&[0]).unwrap(), one);
        assert!(one.berezin_integrate(&[0]).unwrap().is_zero());
        let a = GrassmannElement::scalar(n, 3.0) + q.scale(5.0);
        assert_eq!(a.berezin_integrate(&[0]).unwrap(), GrassmannElement::scalar(n, 5.0));
        assert_eq!(q.berezin_integrate(&[0, 0]), Err(Error::DuplicatePair(0)));
    }

    #[test]
    fn json_roundtrip() {
        let a = g(0, 4) * g(3, 4) + GrassmannElement::scalar(4, C64::new(1.0, -2.0));
        let s = serde_json::to_string(&a).unwrap();
        assert!(s.contains("\"generators\":4"));
        let b: GrassmannElement = serde_json::from_str(&s).unwrap();
        assert_eq!(a, b);
    }
}

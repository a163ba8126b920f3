//! Arithmetic in `GF(p^k)` over an explicit irreducible modulus.
//!
//! Elements are carried as their canonical encoding `sum digits[i] * p^i`,
//! where `digits[i]` is the coefficient of `alpha^i` in the polynomial basis.
//! Every permutation table, certificate file and tie-break in this crate uses
//! that encoding, so `FieldElem` is a plain `u32` newtype bound to a field by
//! context.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest field order accepted. Keeps every product of two digits (and of
/// two prime-field residues) inside a `u64`.
pub const MAX_ORDER: u64 = 1 << 31;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GfError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("extension degree must be at least 1")]
    ZeroDegree,
    #[error("field order {p}^{k} exceeds the 2^31 cap")]
    OrderTooLarge { p: u64, k: u32 },
    #[error("modulus {got:?} is not a monic degree-{degree} polynomial over GF({p})")]
    BadModulus { p: u32, degree: u32, got: Vec<u32> },
    #[error("modulus {0:?} is reducible")]
    Reducible(Vec<u32>),
    #[error("encoding {enc} is out of range for a field of order {q}")]
    OutOfRange { enc: u64, q: u32 },
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("denominator {d} vanishes in characteristic {p}")]
    VanishingDenominator { d: i64, p: u32 },
    #[error("the quadratic character is undefined in characteristic 2")]
    Characteristic2,
    #[error("cannot parse modulus {0:?}")]
    ParseModulus(String),
}

/// An element of `GF(q)` by canonical encoding.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FieldElem(u32);

impl FieldElem {
    pub const ZERO: FieldElem = FieldElem(0);
    pub const ONE: FieldElem = FieldElem(1);

    #[inline]
    pub fn enc(self) -> u32 {
        self.0
    }

    #[inline]
    pub(crate) fn from_enc_unchecked(enc: u32) -> Self {
        FieldElem(enc)
    }
}

impl fmt::Display for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Wire form of a field: `{p, k, modulus: [c0, ..., ck]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldDescriptor {
    pub p: u32,
    pub k: u32,
    pub modulus: Vec<u32>,
}

/// The field `GF(p^k) = GF(p)[x] / (modulus)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(into = "FieldDescriptor", try_from = "FieldDescriptor")]
pub struct FieldSpec {
    p: u32,
    k: u32,
    q: u32,
    modulus: Vec<u32>,
    // place[i] = p^i
    place: Vec<u32>,
}

impl PartialEq for FieldSpec {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.k == other.k && self.modulus == other.modulus
    }
}

impl Eq for FieldSpec {}

impl From<FieldSpec> for FieldDescriptor {
    fn from(spec: FieldSpec) -> Self {
        FieldDescriptor { p: spec.p, k: spec.k, modulus: spec.modulus }
    }
}

impl TryFrom<FieldDescriptor> for FieldSpec {
    type Error = GfError;

    fn try_from(d: FieldDescriptor) -> Result<Self, GfError> {
        FieldSpec::new(d.p, d.k, Some(d.modulus))
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.k == 1 {
            write!(f, "GF({})", self.p)
        } else {
            write!(f, "GF({}^{}) mod {:?}", self.p, self.k, self.modulus)
        }
    }
}

/// Deterministic primality by trial division; adequate for `p < 2^32`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Returns `p^k` if it is at most [`MAX_ORDER`].
pub fn checked_order(p: u64, k: u32) -> Option<u32> {
    let mut q = 1u64;
    for _ in 0..k {
        q = q.checked_mul(p)?;
        if q > MAX_ORDER {
            return None;
        }
    }
    u32::try_from(q).ok()
}

/// Parses a modulus digit list such as `2,2,1` or `[2, 2, 1]`.
pub fn parse_modulus(s: &str) -> Result<Vec<u32>, GfError> {
    let err = || GfError::ParseModulus(s.to_owned());
    let body = s.trim();
    let body = body.strip_prefix('[').map_or(Ok(body), |b| b.strip_suffix(']').ok_or_else(err))?;
    if body.trim().is_empty() {
        return Err(err());
    }
    body.split(',').map(|t| t.trim().parse::<u32>().map_err(|_| err())).collect()
}

// Polynomials over GF(p), coefficient vectors low degree first.

fn poly_rem_monic(p: u32, num: &[u32], den: &[u32]) -> Vec<u32> {
    let p64 = u64::from(p);
    let dd = den.len() - 1;
    let mut r: Vec<u64> = num.iter().map(|&c| u64::from(c)).collect();
    if r.len() <= dd {
        return num.to_vec();
    }
    for top in (dd..r.len()).rev() {
        let c = r[top] % p64;
        if c == 0 {
            continue;
        }
        let shift = top - dd;
        for (i, &m) in den.iter().enumerate() {
            let sub = c * u64::from(m) % p64;
            r[shift + i] = (r[shift + i] + p64 - sub) % p64;
        }
    }
    r.truncate(dd);
    r.into_iter().map(|c| (c % p64) as u32).collect()
}

/// Irreducibility by trial division against every monic polynomial of
/// degree `1..=deg/2`.
pub fn is_irreducible(p: u32, poly: &[u32]) -> bool {
    let deg = poly.len().saturating_sub(1);
    if deg == 0 || poly[deg] != 1 {
        return false;
    }
    for d in 1..=deg / 2 {
        let count = u64::from(p).pow(d as u32);
        let mut cand = vec![0u32; d + 1];
        cand[d] = 1;
        for n in 0..count {
            let mut m = n;
            for c in cand.iter_mut().take(d) {
                *c = (m % u64::from(p)) as u32;
                m /= u64::from(p);
            }
            if poly_rem_monic(p, poly, &cand).iter().all(|&c| c == 0) {
                return false;
            }
        }
    }
    true
}

/// The least monic irreducible of degree `k`, comparing digit vectors with
/// the constant term most significant.
fn default_modulus(p: u32, k: u32) -> Vec<u32> {
    let total = u64::from(p).pow(k);
    let mut poly = vec![0u32; k as usize + 1];
    poly[k as usize] = 1;
    for n in 0..total {
        let mut m = n;
        for i in (0..k as usize).rev() {
            poly[i] = (m % u64::from(p)) as u32;
            m /= u64::from(p);
        }
        if is_irreducible(p, &poly) {
            return poly;
        }
    }
    unreachable!("irreducible polynomials exist in every degree")
}

impl FieldSpec {
    /// Builds `GF(p^k)`. With `modulus = None` the default (lexicographically
    /// least) irreducible is used.
    pub fn new(p: u32, k: u32, modulus: Option<Vec<u32>>) -> Result<FieldSpec, GfError> {
        if !is_prime(u64::from(p)) {
            return Err(GfError::NotPrime(u64::from(p)));
        }
        if k == 0 {
            return Err(GfError::ZeroDegree);
        }
        let q = checked_order(u64::from(p), k).ok_or(GfError::OrderTooLarge { p: u64::from(p), k })?;
        let modulus = match modulus {
            Some(m) => {
                let well_formed = m.len() == k as usize + 1 && m[k as usize] == 1 && m.iter().all(|&c| c < p);
                if !well_formed {
                    return Err(GfError::BadModulus { p, degree: k, got: m });
                }
                if !is_irreducible(p, &m) {
                    return Err(GfError::Reducible(m));
                }
                m
            }
            None => default_modulus(p, k),
        };
        let place = (0..k).map(|i| p.pow(i)).collect();
        Ok(FieldSpec { p, k, q, modulus, place })
    }

    /// The prime field `GF(p)`.
    pub fn prime(p: u32) -> Result<FieldSpec, GfError> {
        FieldSpec::new(p, 1, None)
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    pub fn descriptor(&self) -> FieldDescriptor {
        self.clone().into()
    }

    pub fn elem(&self, enc: u64) -> Result<FieldElem, GfError> {
        if enc < u64::from(self.q) {
            Ok(FieldElem(enc as u32))
        } else {
            Err(GfError::OutOfRange { enc, q: self.q })
        }
    }

    /// All elements in increasing encoding.
    pub fn elements(&self) -> impl Iterator<Item = FieldElem> + Clone {
        (0..self.q).map(FieldElem)
    }

    /// The generator `alpha` of the polynomial basis (encoding `p`), or the
    /// constant `0` in a prime field where `x` reduces to `0` modulo `x`.
    pub fn generator(&self) -> FieldElem {
        if self.k == 1 {
            FieldElem((self.p - self.modulus[0]) % self.p)
        } else {
            FieldElem(self.p)
        }
    }

    pub fn digits(&self, x: FieldElem) -> Vec<u32> {
        let mut v = x.0;
        (0..self.k)
            .map(|_| {
                let d = v % self.p;
                v /= self.p;
                d
            })
            .collect()
    }

    pub fn from_digits(&self, digits: &[u32]) -> Result<FieldElem, GfError> {
        if digits.len() != self.k as usize || digits.iter().any(|&d| d >= self.p) {
            return Err(GfError::OutOfRange { enc: u64::MAX, q: self.q });
        }
        Ok(FieldElem(digits.iter().zip(&self.place).map(|(d, w)| d * w).sum()))
    }

    /// Image of the integer `n` under `Z -> GF(q)`.
    pub fn from_int(&self, n: i64) -> FieldElem {
        FieldElem(n.rem_euclid(i64::from(self.p)) as u32)
    }

    /// Image of `n/d` under `Z -> GF(q)`; fails when `p | d`.
    pub fn embed_rational(&self, n: i64, d: i64) -> Result<FieldElem, GfError> {
        let den = self.from_int(d);
        if den == FieldElem::ZERO {
            return Err(GfError::VanishingDenominator { d, p: self.p });
        }
        Ok(self.mul(self.from_int(n), self.inv(den)?))
    }

    #[inline]
    pub fn add(&self, x: FieldElem, y: FieldElem) -> FieldElem {
        let p = self.p;
        if self.k == 1 {
            let s = x.0 as u64 + y.0 as u64;
            return FieldElem((s % p as u64) as u32);
        }
        let (mut a, mut b, mut out) = (x.0, y.0, 0u32);
        for &w in &self.place {
            let d = a % p + b % p;
            out += if d >= p { d - p } else { d } * w;
            a /= p;
            b /= p;
        }
        FieldElem(out)
    }

    #[inline]
    pub fn neg(&self, x: FieldElem) -> FieldElem {
        let p = self.p;
        if self.k == 1 {
            return FieldElem(if x.0 == 0 { 0 } else { p - x.0 });
        }
        let (mut a, mut out) = (x.0, 0u32);
        for &w in &self.place {
            let d = a % p;
            out += if d == 0 { 0 } else { p - d } * w;
            a /= p;
        }
        FieldElem(out)
    }

    #[inline]
    pub fn sub(&self, x: FieldElem, y: FieldElem) -> FieldElem {
        let p = self.p;
        if self.k == 1 {
            let s = x.0 as u64 + p as u64 - y.0 as u64;
            return FieldElem((s % p as u64) as u32);
        }
        let (mut a, mut b, mut out) = (x.0, y.0, 0u32);
        for &w in &self.place {
            let d = a % p + p - b % p;
            out += if d >= p { d - p } else { d } * w;
            a /= p;
            b /= p;
        }
        FieldElem(out)
    }

    pub fn mul(&self, x: FieldElem, y: FieldElem) -> FieldElem {
        let p = u64::from(self.p);
        if self.k == 1 {
            return FieldElem((u64::from(x.0) * u64::from(y.0) % p) as u32);
        }
        let k = self.k as usize;
        // q <= 2^31 forces k <= 31
        let mut a = [0u64; 31];
        let mut b = [0u64; 31];
        let (mut u, mut v) = (u64::from(x.0), u64::from(y.0));
        for i in 0..k {
            a[i] = u % p;
            b[i] = v % p;
            u /= p;
            v /= p;
        }
        let mut prod = [0u64; 61];
        for i in 0..k {
            if a[i] == 0 {
                continue;
            }
            for j in 0..k {
                prod[i + j] += a[i] * b[j];
            }
        }
        for top in (k..2 * k - 1).rev() {
            let c = prod[top] % p;
            prod[top] = 0;
            if c == 0 {
                continue;
            }
            let shift = top - k;
            for i in 0..k {
                let m = u64::from(self.modulus[i]);
                if m != 0 {
                    prod[shift + i] = prod[shift + i] % p + c * (p - m);
                }
            }
        }
        let mut out = 0u64;
        for i in (0..k).rev() {
            out = out * p + prod[i] % p;
        }
        FieldElem(out as u32)
    }

    pub fn pow(&self, x: FieldElem, mut e: u64) -> FieldElem {
        let mut base = x;
        let mut acc = FieldElem::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// `x^(q-2)` by square-and-multiply.
    pub fn inv(&self, x: FieldElem) -> Result<FieldElem, GfError> {
        if x == FieldElem::ZERO {
            return Err(GfError::ZeroInverse);
        }
        Ok(self.pow(x, u64::from(self.q) - 2))
    }

    /// Euler's criterion: `0` at zero, otherwise `x^((q-1)/2)` read as `+-1`.
    pub fn legendre(&self, x: FieldElem) -> Result<i8, GfError> {
        if self.p == 2 {
            return Err(GfError::Characteristic2);
        }
        if x == FieldElem::ZERO {
            return Ok(0);
        }
        Ok(if self.pow(x, u64::from(self.q - 1) / 2) == FieldElem::ONE { 1 } else { -1 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f9() -> FieldSpec {
        FieldSpec::new(3, 2, Some(vec![2, 2, 1])).unwrap()
    }

    // Extended Euclid on digit polynomials, independent of `pow`.
    fn inv_euclid(f: &FieldSpec, x: FieldElem) -> FieldElem {
        let p = i64::from(f.p());
        let md = |a: i64| a.rem_euclid(p);
        let inv_p = |a: i64| (1..p).find(|b| md(a * b) == 1).unwrap();
        let trim = |v: &mut Vec<i64>| {
            while v.len() > 1 && *v.last().unwrap() == 0 {
                v.pop();
            }
        };
        let divmod = |a: &[i64], b: &[i64]| -> (Vec<i64>, Vec<i64>) {
            let mut r = a.to_vec();
            let db = b.len() - 1;
            let lc = inv_p(b[db]);
            let mut quo = vec![0i64; a.len().max(b.len())];
            while r.len() > db && r != [0] {
                let top = r.len() - 1;
                let c = md(r[top] * lc);
                quo[top - db] = c;
                for i in 0..=db {
                    r[top - db + i] = md(r[top - db + i] - c * b[i]);
                }
                trim(&mut r);
            }
            trim(&mut quo);
            (quo, r)
        };
        let mulp = |a: &[i64], b: &[i64]| -> Vec<i64> {
            let mut o = vec![0i64; a.len() + b.len() - 1];
            for (i, x) in a.iter().enumerate() {
                for (j, y) in b.iter().enumerate() {
                    o[i + j] = md(o[i + j] + x * y);
                }
            }
            o
        };
        let subp = |a: &[i64], b: &[i64]| -> Vec<i64> {
            let n = a.len().max(b.len());
            let mut o: Vec<i64> =
                (0..n).map(|i| md(a.get(i).copied().unwrap_or(0) - b.get(i).copied().unwrap_or(0))).collect();
            trim(&mut o);
            o
        };
        let mut r0: Vec<i64> = f.modulus().iter().map(|&c| i64::from(c)).collect();
        let mut r1: Vec<i64> = f.digits(x).iter().map(|&c| i64::from(c)).collect();
        trim(&mut r1);
        let (mut s0, mut s1) = (vec![0i64], vec![1i64]);
        while !(r1.len() == 1 && r1[0] == 0) {
            let (quo, rem) = divmod(&r0, &r1);
            let s2 = subp(&s0, &mulp(&quo, &s1));
            r0 = std::mem::replace(&mut r1, rem);
            s0 = std::mem::replace(&mut s1, s2);
        }
        // r0 is a nonzero constant
        let c = inv_p(r0[0]);
        let mut digits: Vec<u32> = s0.iter().map(|&d| md(d * c) as u32).collect();
        digits.resize(f.k() as usize, 0);
        f.from_digits(&digits).unwrap()
    }

    #[test]
    fn explicit_presentations_build() {
        let f = f9();
        assert_eq!((f.q(), f.modulus()), (9, &[2, 2, 1][..]));
        let f27 = FieldSpec::new(3, 3, Some(vec![1, 2, 0, 1])).unwrap();
        assert_eq!(f27.q(), 27);
    }

    #[test]
    fn prime_field_default_modulus() {
        let f = FieldSpec::new(7, 1, None).unwrap();
        assert_eq!(f.q(), 7);
        assert_eq!(f.modulus(), &[0, 1]);
        assert_eq!(f.add(FieldElem(3), FieldElem(5)), FieldElem(1));
    }

    #[test]
    fn default_modulus_is_lexicographic_minimum() {
        assert_eq!(FieldSpec::new(3, 2, None).unwrap().modulus(), &[1, 0, 1]);
        // x^2 + 1 splits mod 5 (2^2 = -1); x^2 + x + 1 has discriminant -3, a non-square.
        assert_eq!(FieldSpec::new(5, 2, None).unwrap().modulus(), &[1, 1, 1]);
        // x^3 + 1 has the root -1; x^3 + x^2 + 1 has no root in GF(2).
        assert_eq!(FieldSpec::new(2, 3, None).unwrap().modulus(), &[1, 0, 1, 1]);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(
            FieldSpec::new(5, 2, Some(vec![1, 1, 0])).unwrap_err(),
            GfError::BadModulus { p: 5, degree: 2, got: vec![1, 1, 0] }
        );
        assert_eq!(FieldSpec::new(5, 2, Some(vec![0, 1, 1])).unwrap_err(), GfError::Reducible(vec![0, 1, 1]));
        assert_eq!(FieldSpec::new(9, 1, None).unwrap_err(), GfError::NotPrime(9));
        assert!(matches!(FieldSpec::new(3, 40, None), Err(GfError::OrderTooLarge { .. })));
        assert_eq!(FieldSpec::new(3, 0, None).unwrap_err(), GfError::ZeroDegree);
    }

    #[test]
    fn alpha_squared_in_f9() {
        let f = f9();
        let alpha = f.generator();
        assert_eq!(alpha.enc(), 3);
        // alpha^2 = -2 alpha - 2 = alpha + 1
        assert_eq!(f.mul(alpha, alpha), f.add(alpha, FieldElem::ONE));
    }

    #[test]
    fn inverse_examples() {
        let f7 = FieldSpec::prime(7).unwrap();
        assert_eq!(f7.inv(FieldElem(3)).unwrap(), FieldElem(5));
        assert_eq!(f7.inv(FieldElem::ONE).unwrap(), FieldElem::ONE);
        assert_eq!(f7.inv(FieldElem::ZERO), Err(GfError::ZeroInverse));
        let f = f9();
        let alpha = f.generator();
        let expected = f.add(alpha, FieldElem(2));
        assert_eq!(f.inv(alpha).unwrap(), expected);
        assert_eq!(inv_euclid(&f, alpha), expected);
    }

    #[test]
    fn inverse_routes_agree() {
        for (p, k) in [(3, 2), (3, 3), (5, 2), (7, 2), (2, 5), (13, 1), (3, 5)] {
            let f = FieldSpec::new(p, k, None).unwrap();
            for x in f.elements().skip(1) {
                let i = f.inv(x).unwrap();
                assert_eq!(f.mul(x, i), FieldElem::ONE);
                assert_eq!(inv_euclid(&f, x), i, "{f} x={x}");
                assert_eq!(f.inv(i).unwrap(), x);
            }
        }
    }

    #[test]
    fn embed_rational_examples() {
        let f13 = FieldSpec::prime(13).unwrap();
        assert_eq!(f13.embed_rational(3, 2).unwrap(), FieldElem(8));
        assert_eq!(f13.embed_rational(1, 3).unwrap(), FieldElem(9));
        let f5 = FieldSpec::prime(5).unwrap();
        assert_eq!(f5.embed_rational(-3, 5), Err(GfError::VanishingDenominator { d: 5, p: 5 }));
    }

    #[test]
    fn legendre_examples() {
        let f7 = FieldSpec::prime(7).unwrap();
        assert_eq!(f7.legendre(FieldElem(2)).unwrap(), 1);
        assert_eq!(f7.legendre(FieldElem(3)).unwrap(), -1);
        assert_eq!(f7.legendre(FieldElem::ZERO).unwrap(), 0);
        let f = f9();
        assert_eq!(f.legendre(f.neg(FieldElem::ONE)).unwrap(), 1);
        let f8 = FieldSpec::new(2, 3, None).unwrap();
        assert_eq!(f8.legendre(FieldElem::ONE), Err(GfError::Characteristic2));
    }

    #[test]
    fn additive_inverse() {
        let f = FieldSpec::new(5, 3, None).unwrap();
        for x in f.elements() {
            assert_eq!(f.add(x, f.neg(x)), FieldElem::ZERO);
            assert_eq!(f.sub(x, x), FieldElem::ZERO);
        }
    }

    #[test]
    fn parse_modulus_forms() {
        assert_eq!(parse_modulus("2,2,1").unwrap(), vec![2, 2, 1]);
        assert_eq!(parse_modulus(" [1, 2, 0, 1] ").unwrap(), vec![1, 2, 0, 1]);
        assert!(parse_modulus("").is_err());
        assert!(parse_modulus("[1,2").is_err());
        assert!(parse_modulus("1,-2").is_err());
    }

    #[test]
    fn digits_round_trip() {
        let f = FieldSpec::new(3, 3, Some(vec![1, 2, 0, 1])).unwrap();
        let beta = f.generator();
        assert_eq!(f.digits(f.mul(beta, beta)), vec![0, 0, 1]);
        for x in f.elements() {
            assert_eq!(f.from_digits(&f.digits(x)).unwrap(), x);
        }
    }
}

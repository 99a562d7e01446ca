//! Exact arithmetic in F_{p^n} for odd p.
//!
//! Elements are stored by their canonical integer encoding: the coefficient
//! vector `(c_0, ..., c_{n-1})` of the polynomial representative read as the
//! base-p number `c_0 + c_1 p + ... + c_{n-1} p^{n-1}`. The encoding is a
//! bijection with the coefficient vector, so equality of [`Scalar`]s is
//! coefficient-wise equality.
//!
//! The additive character is the canonical one, `chi(x) = exp(2 pi i Tr(x) / p)`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Largest supported field order (element codes are `u32`).
pub const MAX_FIELD_ORDER: u64 = 1 << 31;

const TABLE_MAX: u32 = 1024;
const LOOKUP_MAX: u32 = 1 << 20;

/// An element of F_q, held as its canonical integer encoding.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Scalar(u32);

impl Scalar {
    pub const ZERO: Scalar = Scalar(0);
    pub const ONE: Scalar = Scalar(1);

    /// Canonical integer encoding.
    #[inline]
    pub fn code(self) -> u32 {
        self.0
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub(crate) fn from_code_unchecked(code: u32) -> Scalar {
        Scalar(code)
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

struct FieldInner {
    p: u32,
    n: u32,
    q: u32,
    modulus: Vec<u32>,
    add_table: Option<Vec<u32>>,
    mul_table: Option<Vec<u32>>,
    trace_table: Vec<u32>,
    sqrt_table: Vec<u32>,
    roots: Vec<Complex64>,
}

/// Description of a finite field F_{p^n}, p odd.
///
/// Cheap to clone; all clones share the precomputed tables.
#[derive(Clone)]
pub struct FieldDesc {
    inner: Arc<FieldInner>,
}

impl fmt::Debug for FieldDesc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FieldDesc({})", self.spec_string())
    }
}

impl PartialEq for FieldDesc {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.p() == other.p() && self.n() == other.n() && self.modulus() == other.modulus())
    }
}

impl Eq for FieldDesc {}

pub fn is_prime(v: u64) -> bool {
    if v < 2 {
        return false;
    }
    if v < 4 {
        return true;
    }
    if v % 2 == 0 {
        return false;
    }
    let mut i = 3u64;
    while i * i <= v {
        if v % i == 0 {
            return false;
        }
        i += 2;
    }
    true
}

/// `(p, n)` with `q = p^n` and `n >= 2`, if `q` is such a power.
fn prime_power(q: u64) -> Option<(u64, u32)> {
    let p = (2..=q).take_while(|d| d * d <= q).find(|d| q % d == 0)?;
    let mut rest = q;
    let mut n = 0;
    while rest % p == 0 {
        rest /= p;
        n += 1;
    }
    (rest == 1 && is_prime(p)).then_some((p, n))
}

/// Builds and validates F_{p^n}.
///
/// With `modulus = None` and `n > 1` the lexicographically smallest monic
/// irreducible polynomial of degree `n` is chosen (coefficients compared
/// constant term first).
pub fn make_field(p: u64, n: u32, modulus: Option<&[u32]>) -> Result<FieldDesc> {
    if !is_prime(p) {
        return Err(LabError::NonPrime(p));
    }
    if p == 2 {
        return Err(LabError::EvenCharacteristic);
    }
    if n == 0 {
        return Err(LabError::InvalidModulus("extension degree must be at least 1".into()));
    }
    let q = (p as u128).checked_pow(n).unwrap_or(u128::MAX);
    if q >= MAX_FIELD_ORDER as u128 {
        return Err(LabError::FieldTooLarge(q));
    }
    let p = p as u32;
    let modulus = if n == 1 {
        vec![0, 1]
    } else {
        match modulus {
            Some(m) => {
                if m.len() != n as usize + 1 {
                    return Err(LabError::InvalidModulus(format!(
                        "expected {} coefficients, got {}",
                        n + 1,
                        m.len()
                    )));
                }
                if m[n as usize] != 1 {
                    return Err(LabError::InvalidModulus("modulus must be monic".into()));
                }
                if let Some(c) = m.iter().find(|&&c| c >= p) {
                    return Err(LabError::InvalidModulus(format!("coefficient {c} is not reduced mod {p}")));
                }
                if !poly::is_irreducible(m, p) {
                    return Err(LabError::ReducibleModulus { p });
                }
                m.to_vec()
            }
            None => poly::smallest_irreducible(p, n),
        }
    };
    Ok(FieldDesc::build(p, n, q as u32, modulus))
}

impl FieldDesc {
    fn build(p: u32, n: u32, q: u32, modulus: Vec<u32>) -> FieldDesc {
        let roots = (0..p)
            .map(|k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / p as f64))
            .collect();
        let mut inner = FieldInner {
            p,
            n,
            q,
            modulus,
            add_table: None,
            mul_table: None,
            trace_table: Vec::new(),
            sqrt_table: Vec::new(),
            roots,
        };
        if n > 1 && q <= TABLE_MAX {
            let tmp = FieldDesc { inner: Arc::new(clone_bare(&inner)) };
            let qs = q as usize;
            let mut add = vec![0u32; qs * qs];
            let mut mul = vec![0u32; qs * qs];
            for a in 0..q {
                for b in 0..q {
                    add[a as usize * qs + b as usize] = tmp.add_slow(a, b);
                    mul[a as usize * qs + b as usize] = tmp.mul_slow(a, b);
                }
            }
            inner.add_table = Some(add);
            inner.mul_table = Some(mul);
        }
        if q <= LOOKUP_MAX {
            let tmp = FieldDesc { inner: Arc::new(clone_bare_tables(&inner)) };
            inner.trace_table = (0..q).map(|c| tmp.trace_slow(Scalar(c))).collect();
            let mut sqrt = vec![u32::MAX; q as usize];
            for c in 0..q {
                let sq = tmp.mul(Scalar(c), Scalar(c)).0 as usize;
                if sqrt[sq] == u32::MAX {
                    sqrt[sq] = c;
                }
            }
            inner.sqrt_table = sqrt;
        }
        FieldDesc { inner: Arc::new(inner) }
    }

    /// Parses `"q"`, `"p^n"` or `"p^n/c0,c1,...,cn"`. A bare prime power
    /// such as `"9"` means `3^2` with the default modulus.
    pub fn from_spec(spec: &str) -> Result<FieldDesc> {
        let spec = spec.trim();
        let (head, modulus) = match spec.split_once('/') {
            Some((h, m)) => {
                let coeffs = m
                    .split(',')
                    .map(|c| c.trim().parse::<u32>().map_err(|e| LabError::Parse(format!("modulus coefficient {c:?}: {e}"))))
                    .collect::<Result<Vec<_>>>()?;
                (h, Some(coeffs))
            }
            None => (spec, None),
        };
        let (p, n) = match head.split_once('^') {
            Some((p, n)) => (
                p.trim().parse::<u64>().map_err(|e| LabError::Parse(format!("characteristic {p:?}: {e}")))?,
                n.trim().parse::<u32>().map_err(|e| LabError::Parse(format!("degree {n:?}: {e}")))?,
            ),
            None => {
                let q = head.trim().parse::<u64>().map_err(|e| LabError::Parse(format!("field {head:?}: {e}")))?;
                prime_power(q).unwrap_or((q, 1))
            }
        };
        make_field(p, n, modulus.as_deref())
    }

    /// Canonical spec string; always includes the modulus for extensions.
    pub fn spec_string(&self) -> String {
        if self.n() == 1 {
            self.p().to_string()
        } else {
            let m: Vec<String> = self.modulus().iter().map(|c| c.to_string()).collect();
            format!("{}^{}/{}", self.p(), self.n(), m.join(","))
        }
    }

    #[inline]
    pub fn p(&self) -> u32 {
        self.inner.p
    }

    #[inline]
    pub fn n(&self) -> u32 {
        self.inner.n
    }

    #[inline]
    pub fn q(&self) -> u32 {
        self.inner.q
    }

    /// Modulus coefficients, constant term first (`[0, 1]` for prime fields).
    pub fn modulus(&self) -> &[u32] {
        &self.inner.modulus
    }

    #[inline]
    pub fn is_prime_field(&self) -> bool {
        self.inner.n == 1
    }

    pub fn zero(&self) -> Scalar {
        Scalar::ZERO
    }

    pub fn one(&self) -> Scalar {
        Scalar::ONE
    }

    /// Element with the given canonical code.
    pub fn element(&self, code: u64) -> Result<Scalar> {
        if code >= self.q() as u64 {
            return Err(LabError::InvalidElement { code, q: self.q() as u64 });
        }
        Ok(Scalar(code as u32))
    }

    /// Image of an integer in the prime subfield.
    pub fn from_int(&self, v: i64) -> Scalar {
        Scalar(v.rem_euclid(self.p() as i64) as u32)
    }

    pub fn from_coeffs(&self, coeffs: &[u32]) -> Result<Scalar> {
        if coeffs.len() != self.n() as usize {
            return Err(LabError::DimensionMismatch { expected: self.n() as usize, got: coeffs.len() });
        }
        let p = self.p();
        let mut code = 0u64;
        for &c in coeffs.iter().rev() {
            if c >= p {
                return Err(LabError::InvalidElement { code: c as u64, q: p as u64 });
            }
            code = code * p as u64 + c as u64;
        }
        Ok(Scalar(code as u32))
    }

    /// Coefficient vector, constant term first.
    pub fn coeffs(&self, x: Scalar) -> Vec<u32> {
        let p = self.p();
        let mut c = x.0;
        (0..self.n())
            .map(|_| {
                let d = c % p;
                c /= p;
                d
            })
            .collect()
    }

    /// Parses an element literal: an integer reduced mod p for prime fields,
    /// or the canonical code for extension fields.
    pub fn parse_scalar(&self, s: &str) -> Result<Scalar> {
        let v: i64 = s.trim().parse().map_err(|e| LabError::Parse(format!("element {s:?}: {e}")))?;
        if self.is_prime_field() {
            Ok(self.from_int(v))
        } else if v < 0 {
            Err(LabError::Parse(format!("extension-field element codes are nonnegative, got {v}")))
        } else {
            self.element(v as u64)
        }
    }

    pub fn elements(&self) -> impl Iterator<Item = Scalar> + '_ {
        (0..self.q()).map(Scalar)
    }

    #[inline]
    pub fn add(&self, a: Scalar, b: Scalar) -> Scalar {
        let inner = &*self.inner;
        if inner.n == 1 {
            let s = a.0 + b.0;
            Scalar(if s >= inner.p { s - inner.p } else { s })
        } else if let Some(t) = &inner.add_table {
            Scalar(t[a.0 as usize * inner.q as usize + b.0 as usize])
        } else {
            Scalar(self.add_slow(a.0, b.0))
        }
    }

    #[inline]
    pub fn neg(&self, a: Scalar) -> Scalar {
        let inner = &*self.inner;
        if inner.n == 1 {
            Scalar(if a.0 == 0 { 0 } else { inner.p - a.0 })
        } else {
            let p = inner.p;
            let mut c = a.0;
            let mut out = 0u32;
            let mut place = 1u32;
            for _ in 0..inner.n {
                let d = c % p;
                c /= p;
                out += ((p - d) % p) * place;
                place = place.wrapping_mul(p);
            }
            Scalar(out)
        }
    }

    #[inline]
    pub fn sub(&self, a: Scalar, b: Scalar) -> Scalar {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: Scalar, b: Scalar) -> Scalar {
        let inner = &*self.inner;
        if inner.n == 1 {
            Scalar(((a.0 as u64 * b.0 as u64) % inner.p as u64) as u32)
        } else if let Some(t) = &inner.mul_table {
            Scalar(t[a.0 as usize * inner.q as usize + b.0 as usize])
        } else {
            Scalar(self.mul_slow(a.0, b.0))
        }
    }

    #[inline]
    pub fn square(&self, a: Scalar) -> Scalar {
        self.mul(a, a)
    }

    pub fn pow(&self, a: Scalar, mut e: u64) -> Scalar {
        let mut base = a;
        let mut acc = Scalar::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self, a: Scalar) -> Option<Scalar> {
        if a.is_zero() {
            None
        } else {
            Some(self.pow(a, self.q() as u64 - 2))
        }
    }

    /// Absolute trace `x + x^p + ... + x^{p^{n-1}}`, returned as a residue mod p.
    pub fn trace(&self, x: Scalar) -> u32 {
        let inner = &*self.inner;
        if inner.n == 1 {
            x.0
        } else if !inner.trace_table.is_empty() {
            inner.trace_table[x.0 as usize]
        } else {
            self.trace_slow(x)
        }
    }

    /// `exp(2 pi i Tr(x) / p)`.
    #[inline]
    pub fn character(&self, x: Scalar) -> Complex64 {
        self.inner.roots[self.trace(x) as usize]
    }

    /// The p-th root of unity `exp(2 pi i k / p)`.
    #[inline]
    pub(crate) fn root_of_unity(&self, k: u32) -> Complex64 {
        self.inner.roots[k as usize]
    }

    /// Smallest (by code) square root of `x`, if `x` is a square.
    pub fn sqrt(&self, x: Scalar) -> Option<Scalar> {
        let inner = &*self.inner;
        if !inner.sqrt_table.is_empty() {
            let r = inner.sqrt_table[x.0 as usize];
            return (r != u32::MAX).then_some(Scalar(r));
        }
        self.elements().find(|&c| self.square(c) == x)
    }

    /// The element `i` with `i^2 = -1` of smallest code; present iff q = 1 mod 4.
    pub fn sqrt_of_minus_one(&self) -> Option<Scalar> {
        self.sqrt(self.neg(Scalar::ONE))
    }

    /// Lexicographically smallest `(a, b)` (by codes) with `a^2 + b^2 = -1`.
    pub fn two_squares_minus_one(&self) -> (Scalar, Scalar) {
        let minus_one = self.neg(Scalar::ONE);
        for a in self.elements() {
            let rest = self.sub(minus_one, self.square(a));
            if let Some(b) = self.sqrt(rest) {
                return (a, b);
            }
        }
        unreachable!("every element of a finite field of odd order is a sum of two squares")
    }

    fn add_slow(&self, a: u32, b: u32) -> u32 {
        let p = self.p();
        let (mut a, mut b) = (a, b);
        let mut out = 0u32;
        let mut place = 1u32;
        for _ in 0..self.n() {
            let d = (a % p + b % p) % p;
            a /= p;
            b /= p;
            out += d * place;
            place = place.wrapping_mul(p);
        }
        out
    }

    fn mul_slow(&self, a: u32, b: u32) -> u32 {
        let p = self.p() as u64;
        let n = self.n() as usize;
        let ca = self.coeffs(Scalar(a));
        let cb = self.coeffs(Scalar(b));
        let mut prod = vec![0u64; 2 * n - 1];
        for (i, &x) in ca.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in cb.iter().enumerate() {
                prod[i + j] = (prod[i + j] + x as u64 * y as u64) % p;
            }
        }
        let m = &self.inner.modulus;
        for i in (n..prod.len()).rev() {
            let c = prod[i];
            if c == 0 {
                continue;
            }
            prod[i] = 0;
            for j in 0..n {
                let t = (c * m[j] as u64) % p;
                prod[i - n + j] = (prod[i - n + j] + p - t) % p;
            }
        }
        let mut code = 0u64;
        for &c in prod[..n].iter().rev() {
            code = code * p + c;
        }
        code as u32
    }

    fn trace_slow(&self, x: Scalar) -> u32 {
        let mut acc = Scalar::ZERO;
        let mut y = x;
        for _ in 0..self.n() {
            acc = self.add(acc, y);
            y = self.pow(y, self.p() as u64);
        }
        debug_assert!(acc.0 < self.p(), "trace left the prime subfield");
        acc.0
    }
}

fn clone_bare(inner: &FieldInner) -> FieldInner {
    FieldInner {
        p: inner.p,
        n: inner.n,
        q: inner.q,
        modulus: inner.modulus.clone(),
        add_table: None,
        mul_table: None,
        trace_table: Vec::new(),
        sqrt_table: Vec::new(),
        roots: inner.roots.clone(),
    }
}

fn clone_bare_tables(inner: &FieldInner) -> FieldInner {
    let mut bare = clone_bare(inner);
    bare.add_table = inner.add_table.clone();
    bare.mul_table = inner.mul_table.clone();
    bare
}

impl FromStr for FieldDesc {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        FieldDesc::from_spec(s)
    }
}

impl fmt::Display for FieldDesc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.spec_string())
    }
}

impl Serialize for FieldDesc {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.spec_string())
    }
}

impl<'de> Deserialize<'de> for FieldDesc {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        FieldDesc::from_spec(&s).map_err(serde::de::Error::custom)
    }
}

/// Dense polynomials over F_p, constant term first.
mod poly {
    fn trim(a: &mut Vec<u64>) {
        while a.len() > 1 && *a.last().unwrap() == 0 {
            a.pop();
        }
    }

    fn inv_mod(a: u64, p: u64) -> u64 {
        let mut acc = 1u64;
        let mut base = a % p;
        let mut e = p - 2;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base % p;
            }
            base = base * base % p;
            e >>= 1;
        }
        acc
    }

    fn rem(a: &[u64], f: &[u64], p: u64) -> Vec<u64> {
        let mut r = a.to_vec();
        trim(&mut r);
        let df = f.len() - 1;
        let lead_inv = inv_mod(f[df], p);
        while r.len() > df && !(r.len() == 1 && r[0] == 0) {
            let dr = r.len() - 1;
            let c = r[dr] * lead_inv % p;
            for j in 0..=df {
                let t = c * f[j] % p;
                r[dr - df + j] = (r[dr - df + j] + p - t) % p;
            }
            trim(&mut r);
        }
        r
    }

    fn mulmod(a: &[u64], b: &[u64], f: &[u64], p: u64) -> Vec<u64> {
        let mut prod = vec![0u64; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                prod[i + j] = (prod[i + j] + x * y) % p;
            }
        }
        rem(&prod, f, p)
    }

    fn powmod(base: &[u64], mut e: u64, f: &[u64], p: u64) -> Vec<u64> {
        let mut acc = vec![1u64];
        let mut b = rem(base, f, p);
        while e > 0 {
            if e & 1 == 1 {
                acc = mulmod(&acc, &b, f, p);
            }
            b = mulmod(&b, &b, f, p);
            e >>= 1;
        }
        acc
    }

    fn gcd(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        let mut a = a.to_vec();
        let mut b = b.to_vec();
        trim(&mut a);
        trim(&mut b);
        while !(b.len() == 1 && b[0] == 0) {
            let r = rem(&a, &b, p);
            a = b;
            b = r;
        }
        a
    }

    fn is_constant_nonzero(a: &[u64]) -> bool {
        a.len() == 1 && a[0] != 0
    }

    fn prime_divisors(mut n: u32) -> Vec<u32> {
        let mut out = Vec::new();
        let mut d = 2;
        while d * d <= n {
            if n % d == 0 {
                out.push(d);
                while n % d == 0 {
                    n /= d;
                }
            }
            d += 1;
        }
        if n > 1 {
            out.push(n);
        }
        out
    }

    fn has_root(f: &[u64], p: u64) -> bool {
        (0..p).any(|a| f.iter().rev().fold(0u64, |acc, &c| (acc * a + c) % p) == 0)
    }

    /// Root test, plus Rabin's gcd-with-Frobenius test from degree 4 on.
    pub(super) fn is_irreducible(m: &[u32], p: u32) -> bool {
        let p = p as u64;
        let f: Vec<u64> = m.iter().map(|&c| c as u64).collect();
        let n = f.len() - 1;
        if n <= 1 {
            return n == 1;
        }
        if has_root(&f, p) {
            return false;
        }
        if n <= 3 {
            return true;
        }
        let x = vec![0u64, 1];
        // x^{p^k} mod f by repeated Frobenius
        let frob = |k: u32| {
            let mut h = x.clone();
            for _ in 0..k {
                h = powmod(&h, p, &f, p);
            }
            h
        };
        let sub_x = |h: &[u64]| {
            let mut g = h.to_vec();
            if g.len() < 2 {
                g.resize(2, 0);
            }
            g[1] = (g[1] + p - 1) % p;
            trim(&mut g);
            g
        };
        let full = sub_x(&frob(n as u32));
        if !(full.len() == 1 && full[0] == 0) {
            return false;
        }
        prime_divisors(n as u32).into_iter().all(|r| {
            let g = sub_x(&frob(n as u32 / r));
            is_constant_nonzero(&gcd(&f, &g, p))
        })
    }

    pub(super) fn smallest_irreducible(p: u32, n: u32) -> Vec<u32> {
        let total = (p as u64).pow(n);
        for i in 0..total {
            // c_0 is the most significant digit so the scan is lexicographic
            let mut cand = vec![0u32; n as usize + 1];
            let mut rest = i;
            for j in (0..n as usize).rev() {
                cand[j] = (rest % p as u64) as u32;
                rest /= p as u64;
            }
            cand[n as usize] = 1;
            if is_irreducible(&cand, p) {
                return cand;
            }
        }
        unreachable!("irreducible polynomials exist in every degree")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn f(spec: &str) -> FieldDesc {
        FieldDesc::from_spec(spec).unwrap()
    }

    #[test]
    fn construction_examples() {
        let f5 = make_field(5, 1, None).unwrap();
        assert_eq!(f5.q(), 5);
        let f9 = make_field(3, 2, Some(&[1, 0, 1])).unwrap();
        assert_eq!(f9.q(), 9);
        assert_eq!(make_field(3, 2, Some(&[0, 0, 1])).unwrap_err(), LabError::ReducibleModulus { p: 3 });
        assert_eq!(make_field(2, 1, None).unwrap_err(), LabError::EvenCharacteristic);
        assert_eq!(make_field(9, 1, None).unwrap_err(), LabError::NonPrime(9));
        assert!(matches!(make_field(3, 2, Some(&[1, 0, 2])), Err(LabError::InvalidModulus(_))));
    }

    #[test]
    fn default_modulus_is_lexicographically_smallest() {
        assert_eq!(make_field(3, 2, None).unwrap().modulus(), &[1, 0, 1]);
        // x^2 + x + 1 has discriminant -3 = 2, a non-residue mod 5
        assert_eq!(make_field(5, 2, None).unwrap().modulus(), &[1, 1, 1]);
        // degree 4 over F_3 goes through the Frobenius test
        let f81 = make_field(3, 4, None).unwrap();
        assert_eq!(f81.q(), 81);
        let nonzero: Vec<Scalar> = f81.elements().skip(1).collect();
        assert!(nonzero.iter().all(|&x| f81.mul(x, f81.inv(x).unwrap()) == Scalar::ONE));
    }

    #[test]
    fn rabin_rejects_products_of_quadratics() {
        // (x^2+1)^2 = x^4 + 2x^2 + 1 over F_3 has no roots but is reducible
        assert_eq!(make_field(3, 4, Some(&[1, 0, 2, 0, 1])).unwrap_err(), LabError::ReducibleModulus { p: 3 });
    }

    #[test]
    fn spec_strings() {
        assert_eq!(f("7").spec_string(), "7");
        assert_eq!(f("3^2").spec_string(), "3^2/1,0,1");
        assert_eq!(f("3^2/1,0,1").q(), 9);
        assert!(FieldDesc::from_spec("x").is_err());
        assert_eq!(f("3^2"), f("3^2/1,0,1"));
        assert_eq!(f("9"), f("3^2"));
        assert_eq!(f("125").q(), 125);
        assert!(matches!(FieldDesc::from_spec("12"), Err(LabError::NonPrime(12))));
    }

    #[test]
    fn trace_examples() {
        let f5 = f("5");
        assert_eq!(f5.trace(Scalar(3)), 3);
        let f9 = f("3^2/1,0,1");
        assert_eq!(f9.trace(Scalar::ONE), 2);
        let t = f9.from_coeffs(&[0, 1]).unwrap();
        assert_eq!(f9.trace(t), 0);
    }

    #[test]
    fn character_examples() {
        for spec in ["3", "5", "3^2", "7", "5^2", "11", "3^3"] {
            let fd = f(spec);
            assert!((fd.character(Scalar::ZERO) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
            let total: Complex64 = fd.elements().map(|x| fd.character(x)).sum();
            assert!(total.norm() < 1e-9, "{spec}");
            for x in fd.elements() {
                let prod = fd.character(x) * fd.character(fd.neg(x));
                assert!((prod - Complex64::new(1.0, 0.0)).norm() < 1e-12);
                for y in fd.elements() {
                    let lhs = fd.character(fd.add(x, y));
                    let rhs = fd.character(x) * fd.character(y);
                    assert!((lhs - rhs).norm() < 1e-12);
                }
            }
        }
        let f5 = f("5");
        let expected = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 5.0);
        assert!((f5.character(Scalar::ONE) - expected).norm() < 1e-15);
    }

    #[test]
    fn sqrt_of_minus_one_examples() {
        assert_eq!(f("5").sqrt_of_minus_one(), Some(Scalar(2)));
        assert_eq!(f("13").sqrt_of_minus_one(), Some(Scalar(5)));
        assert_eq!(f("7").sqrt_of_minus_one(), None);
    }

    #[test]
    fn sqrt_of_minus_one_iff_q_is_1_mod_4() {
        for p in (3u64..1000).filter(|&p| is_prime(p)) {
            let mut n = 1;
            while p.pow(n) <= 1000 {
                let fd = make_field(p, n, None).unwrap();
                let q = fd.q();
                assert_eq!(fd.sqrt_of_minus_one().is_some(), q % 4 == 1, "q = {q}");
                n += 1;
            }
        }
    }

    #[test]
    fn two_squares_examples() {
        assert_eq!(f("3").two_squares_minus_one(), (Scalar(1), Scalar(1)));
        assert_eq!(f("7").two_squares_minus_one(), (Scalar(2), Scalar(3)));
        assert_eq!(f("5").two_squares_minus_one(), (Scalar(0), Scalar(2)));
        let f27 = f("3^3");
        let (a, b) = f27.two_squares_minus_one();
        assert_eq!(f27.add(f27.square(a), f27.square(b)), f27.neg(Scalar::ONE));
    }

    #[test]
    fn field_axioms_on_random_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for spec in ["3", "13", "101", "3^2", "5^2", "3^4", "7^3", "3^7"] {
            let fd = f(spec);
            for _ in 0..1000 {
                let x = Scalar(rng.gen_range(0..fd.q()));
                let y = Scalar(rng.gen_range(0..fd.q()));
                let z = Scalar(rng.gen_range(0..fd.q()));
                assert_eq!(fd.add(fd.add(x, y), z), fd.add(x, fd.add(y, z)));
                assert_eq!(fd.mul(fd.mul(x, y), z), fd.mul(x, fd.mul(y, z)));
                assert_eq!(fd.mul(x, fd.add(y, z)), fd.add(fd.mul(x, y), fd.mul(x, z)));
                assert_eq!(fd.add(x, fd.neg(x)), Scalar::ZERO);
                if !x.is_zero() {
                    assert_eq!(fd.mul(x, fd.inv(x).unwrap()), Scalar::ONE);
                }
                assert!(fd.trace(x) < fd.p());
                assert_eq!(fd.trace(fd.add(x, y)), (fd.trace(x) + fd.trace(y)) % fd.p());
            }
        }
    }

    #[test]
    fn frobenius_fixes_prime_field() {
        for p in [3u64, 5, 7, 11, 13] {
            let fd = make_field(p, 1, None).unwrap();
            for x in fd.elements() {
                assert_eq!(fd.pow(x, p), x);
            }
        }
    }

    #[test]
    fn coefficient_round_trip() {
        let fd = f("5^3");
        for x in fd.elements() {
            assert_eq!(fd.from_coeffs(&fd.coeffs(x)).unwrap(), x);
        }
        assert_eq!(fd.parse_scalar("17").unwrap(), Scalar(17));
        assert!(fd.parse_scalar("125").is_err());
        assert_eq!(f("7").parse_scalar("-1").unwrap(), Scalar(6));
    }
}

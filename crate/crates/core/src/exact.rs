//! Exact helpers: rational exponents, big-integer power comparisons, and
//! rationals that serialize as `"num/den"`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// A rational exponent such as the Salem parameter `s`.
///
/// Parsed from decimals (`"0.3"` is exactly 3/10) or fractions (`"3/8"`), so
/// threshold comparisons can be done in integers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SValue(Ratio<i64>);

impl SValue {
    pub fn new(num: i64, den: i64) -> SValue {
        SValue(Ratio::new(num, den))
    }

    pub const fn const_int(v: i64) -> SValue {
        SValue(Ratio::new_raw(v, 1))
    }

    pub fn half() -> SValue {
        SValue::new(1, 2)
    }

    pub fn ratio(self) -> Ratio<i64> {
        self.0
    }

    pub fn numer(self) -> i64 {
        *self.0.numer()
    }

    pub fn denom(self) -> i64 {
        *self.0.denom()
    }

    pub fn to_f64(self) -> f64 {
        self.numer() as f64 / self.denom() as f64
    }

    /// Exponent `a + b*s` as an exact rational.
    pub fn affine(self, a: i64, b: i64) -> Ratio<i64> {
        Ratio::from_integer(a) + self.0 * b
    }
}

impl FromStr for SValue {
    type Err = LabError;

    fn from_str(s: &str) -> Result<SValue> {
        let t = s.trim();
        let bad = || LabError::Parse(format!("exponent {s:?}"));
        if let Some((n, d)) = t.split_once('/') {
            let n: i64 = n.trim().parse().map_err(|_| bad())?;
            let d: i64 = d.trim().parse().map_err(|_| bad())?;
            if d == 0 {
                return Err(bad());
            }
            return Ok(SValue::new(n, d));
        }
        let (neg, t) = match t.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, t),
        };
        let (int, frac) = t.split_once('.').unwrap_or((t, ""));
        if int.is_empty() && frac.is_empty() || frac.len() > 15 {
            return Err(bad());
        }
        let int: i64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
        let den = 10i64.pow(frac.len() as u32);
        let frac: i64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
        let num = int.checked_mul(den).and_then(|v| v.checked_add(frac)).ok_or_else(bad)?;
        Ok(SValue::new(if neg { -num } else { num }, den))
    }
}

impl fmt::Display for SValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denom() == 1 {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

impl Serialize for SValue {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for SValue {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Wire {
            Text(String),
            Number(f64),
        }
        match Wire::deserialize(deserializer)? {
            Wire::Text(s) => s.parse().map_err(serde::de::Error::custom),
            Wire::Number(v) => v.to_string().parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Exact rational that serializes as `"num/den"`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(pub BigRational);

impl Rational {
    pub fn from_int(v: i128) -> Rational {
        Rational(BigRational::from_integer(BigInt::from(v)))
    }

    pub fn new(num: i128, den: i128) -> Rational {
        Rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn abs(&self) -> Rational {
        Rational(self.0.abs())
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl FromStr for Rational {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Rational> {
        let bad = || LabError::Parse(format!("rational {s:?}"));
        let (n, d) = s.split_once('/').unwrap_or((s, "1"));
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        Ok(Rational(BigRational::new(n, d)))
    }
}

impl Serialize for Rational {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl std::ops::Add for &Rational {
    type Output = Rational;
    fn add(self, rhs: &Rational) -> Rational {
        Rational(&self.0 + &rhs.0)
    }
}

impl std::ops::Sub for &Rational {
    type Output = Rational;
    fn sub(self, rhs: &Rational) -> Rational {
        Rational(&self.0 - &rhs.0)
    }
}

/// A factor `base^exp` with a rational exponent.
pub type PowerFactor = (u64, Ratio<i64>);

fn lcm(a: i64, b: i64) -> i64 {
    a / num_integer::gcd(a, b) * b
}

/// Compares `prod lhs` with `prod rhs`, each a product of `base^exp`, exactly.
///
/// Both sides are raised to the common denominator of all exponents and
/// negative exponents are moved across, so only nonnegative integer powers of
/// integers are formed.
pub fn compare_products(lhs: &[PowerFactor], rhs: &[PowerFactor]) -> Ordering {
    let den = lhs.iter().chain(rhs).fold(1i64, |acc, (_, e)| lcm(acc, *e.denom()));
    let mut left = BigUint::one();
    let mut right = BigUint::one();
    let mut push = |base: u64, exp: Ratio<i64>, on_left: bool| {
        let k = exp.numer() * (den / exp.denom());
        let (target, k) = match (on_left, k >= 0) {
            (true, true) => (&mut left, k),
            (true, false) => (&mut right, -k),
            (false, true) => (&mut right, k),
            (false, false) => (&mut left, -k),
        };
        *target *= BigUint::from(base).pow(k as u32);
    };
    for &(b, e) in lhs {
        push(b, e, true);
    }
    for &(b, e) in rhs {
        push(b, e, false);
    }
    left.cmp(&right)
}

/// `floor(base^exp)` for a nonnegative rational exponent.
pub fn floor_pow(base: u64, exp: Ratio<i64>) -> u64 {
    assert!(*exp.numer() >= 0, "floor_pow needs a nonnegative exponent");
    if base <= 1 || exp.is_zero() {
        return if exp.is_zero() { 1 } else { base };
    }
    let estimate = (base as f64).powf(*exp.numer() as f64 / *exp.denom() as f64);
    let fits = |n: u64| compare_products(&[(n, Ratio::from_integer(1))], &[(base, exp)]) != Ordering::Greater;
    let mut n = estimate.floor().max(0.0) as u64;
    while n > 0 && !fits(n) {
        n -= 1;
    }
    while fits(n + 1) {
        n += 1;
    }
    n
}

/// `base^exp` in floating point, for bound right-hand sides.
pub fn powf(base: f64, exp: Ratio<i64>) -> f64 {
    base.powf(*exp.numer() as f64 / *exp.denom() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Ratio<i64> {
        Ratio::new(n, d)
    }

    #[test]
    fn svalue_parsing() {
        assert_eq!("0.3".parse::<SValue>().unwrap(), SValue::new(3, 10));
        assert_eq!("0.5".parse::<SValue>().unwrap(), SValue::half());
        assert_eq!("3/8".parse::<SValue>().unwrap(), SValue::new(3, 8));
        assert_eq!("1".parse::<SValue>().unwrap(), SValue::new(1, 1));
        assert_eq!(".25".parse::<SValue>().unwrap(), SValue::new(1, 4));
        assert!("abc".parse::<SValue>().is_err());
        assert!("1/0".parse::<SValue>().is_err());
        let json = serde_json::to_string(&SValue::new(3, 10)).unwrap();
        assert_eq!(json, "\"3/10\"");
        assert_eq!(serde_json::from_str::<SValue>("0.4").unwrap(), SValue::new(2, 5));
    }

    #[test]
    fn rational_round_trip() {
        let x = Rational::new(25, 5);
        assert_eq!(x.to_string(), "5/1");
        assert_eq!("10/4".parse::<Rational>().unwrap(), Rational::new(5, 2));
        let json = serde_json::to_string(&Rational::new(-7, 3)).unwrap();
        assert_eq!(serde_json::from_str::<Rational>(&json).unwrap(), Rational::new(-7, 3));
    }

    #[test]
    fn exact_comparisons() {
        // 13^(1/2) vs 3 and 4
        assert_eq!(compare_products(&[(3, r(1, 1))], &[(13, r(1, 2))]), Ordering::Less);
        assert_eq!(compare_products(&[(4, r(1, 1))], &[(13, r(1, 2))]), Ordering::Greater);
        // 5^(4/4) == 5 exactly
        assert_eq!(compare_products(&[(5, r(1, 1))], &[(5, r(4, 4))]), Ordering::Equal);
        // negative exponents move across: 2 * 4^(-1/2) == 1
        assert_eq!(compare_products(&[(2, r(1, 1)), (4, r(-1, 2))], &[]), Ordering::Equal);
    }

    #[test]
    fn floor_pow_examples() {
        assert_eq!(floor_pow(13, r(1, 2)), 3);
        assert_eq!(floor_pow(5, r(1, 1)), 5);
        assert_eq!(floor_pow(81, r(2, 3)), 18);
        assert_eq!(floor_pow(5, r(5, 6)), 3);
        assert_eq!(floor_pow(1 << 20, r(1, 2)), 1 << 10);
        assert_eq!(floor_pow(7, r(0, 1)), 1);
    }
}

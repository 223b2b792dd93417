//! Exact rational values for DoF quantities and antenna ratios.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// An exact rational number, always held in lowest terms with a positive
/// denominator.
///
/// Serializes as the string `"p/q"` (or `"p"` when integral) so values
/// survive JSON round trips without float loss.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RationalDof(BigRational);

impl RationalDof {
    pub fn new(numer: i64, denom: i64) -> Self {
        assert!(denom != 0, "zero denominator");
        RationalDof(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn from_big(numer: BigInt, denom: BigInt) -> Self {
        assert!(!denom.is_zero(), "zero denominator");
        RationalDof(BigRational::new(numer, denom))
    }

    pub fn integer(value: i64) -> Self {
        RationalDof(BigRational::from_integer(BigInt::from(value)))
    }

    pub fn zero() -> Self {
        RationalDof(BigRational::zero())
    }

    pub fn one() -> Self {
        RationalDof(BigRational::one())
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn floor(&self) -> BigInt {
        self.0.floor().to_integer()
    }

    pub fn ceil(&self) -> BigInt {
        self.0.ceil().to_integer()
    }

    /// Integral value as `u64`, or `None` when fractional, negative or too large.
    pub fn to_u64_exact(&self) -> Option<u64> {
        if self.is_integer() {
            self.numer().to_u64()
        } else {
            None
        }
    }

    /// Reduced denominator as `u64` (saturating is never needed for the
    /// ratios this crate produces; `None` signals overflow).
    pub fn denom_u64(&self) -> Option<u64> {
        self.denom().to_u64()
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn as_big(&self) -> &BigRational {
        &self.0
    }
}

impl From<u64> for RationalDof {
    fn from(v: u64) -> Self {
        RationalDof(BigRational::from_integer(BigInt::from(v)))
    }
}

impl From<usize> for RationalDof {
    fn from(v: usize) -> Self {
        RationalDof(BigRational::from_integer(BigInt::from(v)))
    }
}

impl From<BigInt> for RationalDof {
    fn from(v: BigInt) -> Self {
        RationalDof(BigRational::from_integer(v))
    }
}

impl From<BigRational> for RationalDof {
    fn from(v: BigRational) -> Self {
        RationalDof(v)
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident) => {
        impl $tr for RationalDof {
            type Output = RationalDof;
            fn $method(self, rhs: RationalDof) -> RationalDof {
                RationalDof($tr::$method(self.0, rhs.0))
            }
        }
        impl<'a> $tr<&'a RationalDof> for &'a RationalDof {
            type Output = RationalDof;
            fn $method(self, rhs: &'a RationalDof) -> RationalDof {
                RationalDof($tr::$method(&self.0, &rhs.0))
            }
        }
        impl<'a> $tr<&'a RationalDof> for RationalDof {
            type Output = RationalDof;
            fn $method(self, rhs: &'a RationalDof) -> RationalDof {
                RationalDof($tr::$method(self.0, &rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl Neg for RationalDof {
    type Output = RationalDof;
    fn neg(self) -> RationalDof {
        RationalDof(-self.0)
    }
}

impl fmt::Display for RationalDof {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for RationalDof {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid rational {0:?}: expected \"p\" or \"p/q\" with q > 0")]
pub struct ParseRationalError(String);

impl FromStr for RationalDof {
    type Err = ParseRationalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseRationalError(s.to_string());
        let t = s.trim();
        let (n, d) = match t.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (t, "1"),
        };
        let n: BigInt = n.parse().map_err(|_| err())?;
        let d: BigInt = d.parse().map_err(|_| err())?;
        if !d.is_positive() {
            return Err(err());
        }
        Ok(RationalDof(BigRational::new(n, d)))
    }
}

impl Serialize for RationalDof {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RationalDof {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Binomial coefficient C(n, k) as an arbitrary-precision integer.
pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Least common multiple of two positive integers.
pub fn lcm_u64(a: u64, b: u64) -> u64 {
    a.lcm(&b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lowest_terms_and_sign() {
        let r = RationalDof::new(840, -88);
        assert_eq!(r.to_string(), "-105/11");
        assert!(r.denom().is_positive());
        assert_eq!(RationalDof::new(12, 3).to_string(), "4");
    }

    #[test]
    fn parse_forms() {
        assert_eq!("11/5".parse::<RationalDof>().unwrap(), RationalDof::new(11, 5));
        assert_eq!(" 7 ".parse::<RationalDof>().unwrap(), RationalDof::integer(7));
        assert!("1/0".parse::<RationalDof>().is_err());
        assert!("1/-2".parse::<RationalDof>().is_err());
        assert!("x".parse::<RationalDof>().is_err());
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 3), BigInt::from(10));
        assert_eq!(binomial(6, 0), BigInt::from(1));
        assert_eq!(binomial(3, 4), BigInt::from(0));
        // Past the u64 range.
        assert_eq!(binomial(70, 35).to_string(), "112186277816662845432");
    }

    #[test]
    fn serde_as_string() {
        let r = RationalDof::new(420, 11);
        let j = serde_json::to_string(&r).unwrap();
        assert_eq!(j, "\"420/11\"");
        let back: RationalDof = serde_json::from_str(&j).unwrap();
        assert_eq!(back, r);
    }
}

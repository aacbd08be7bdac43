//! Arbitrary-precision rationals in canonical reduced form.
//!
//! `Rational` wraps [`num_rational::BigRational`], which keeps every value
//! reduced with a positive denominator after each operation, so equality is
//! decidable and values can serve as map keys. The wire format is the string
//! `"p/q"` in lowest terms.
//!
//! The module also provides the frozen bijection between rationals and
//! naturals used by the wellorder keys: a signed Calkin–Wilf enumeration.
//! The encoding is stable across runs by construction (no hashing involved).

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RationalParseError {
    #[error("empty rational literal")]
    Empty,
    #[error("invalid integer part in rational literal: {0}")]
    BadInteger(String),
    #[error("zero denominator in rational literal")]
    ZeroDenominator,
}

/// Exact rational number, always reduced, denominator always positive.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rational(BigRational);

impl Rational {
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn from_big(num: BigInt, den: BigInt) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        Rational(BigRational::new(num, den))
    }

    pub fn integer(n: i64) -> Self {
        Rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    /// 2^(-k), exact.
    pub fn dyadic(k: u32) -> Self {
        Rational(BigRational::new(BigInt::one(), BigInt::one() << k))
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    pub fn recip(&self) -> Self {
        assert!(!self.is_zero(), "reciprocal of zero");
        Rational(self.0.recip())
    }

    pub fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }

    /// Integer power with exact result; negative exponents invert.
    pub fn pow(&self, exp: i32) -> Self {
        Rational(self.0.pow(exp))
    }

    /// Exact n-th root when one exists (both numerator and denominator are
    /// perfect n-th powers); `None` otherwise. Requires a nonnegative base.
    pub fn nth_root_exact(&self, n: u32) -> Option<Self> {
        assert!(n >= 1);
        if self.is_negative() {
            return None;
        }
        if n == 1 {
            return Some(self.clone());
        }
        let num = self.0.numer().magnitude();
        let den = self.0.denom().magnitude();
        let rn = num.nth_root(n);
        let rd = den.nth_root(n);
        if rn.pow(n) == *num && rd.pow(n) == *den {
            Some(Rational(BigRational::new(
                BigInt::from_biguint(Sign::Plus, rn),
                BigInt::from_biguint(Sign::Plus, rd),
            )))
        } else {
            None
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn from_f64_snapped(x: f64, denominator: u64) -> Option<Self> {
        if !x.is_finite() {
            return None;
        }
        let scaled = (x * denominator as f64).round();
        if !scaled.is_finite() || scaled.abs() > 9.0e15 {
            return None;
        }
        Some(Rational(BigRational::new(
            BigInt::from(scaled as i64),
            BigInt::from(denominator),
        )))
    }

    /// The frozen bijection Q -> N: 0 -> 0, positive p/q -> 2*cw(p/q) - 1,
    /// negative -> 2*cw(|p/q|), where `cw` is the Calkin-Wilf tree index.
    pub fn to_nat(&self) -> BigUint {
        if self.is_zero() {
            return BigUint::zero();
        }
        let cw = calkin_wilf_index(
            self.0.numer().magnitude().clone(),
            self.0.denom().magnitude().clone(),
        );
        let two = BigUint::from(2u32);
        if self.is_positive() {
            two * cw - BigUint::one()
        } else {
            two * cw
        }
    }

    /// Inverse of [`Rational::to_nat`].
    pub fn from_nat(n: &BigUint) -> Self {
        if n.is_zero() {
            return Rational::zero();
        }
        let one = BigUint::one();
        let two = BigUint::from(2u32);
        let (idx, negative) = if (n % &two).is_one() {
            ((n + &one) / &two, false)
        } else {
            (n / &two, true)
        };
        let (p, q) = calkin_wilf_value(&idx);
        let r = Rational(BigRational::new(
            BigInt::from_biguint(Sign::Plus, p),
            BigInt::from_biguint(Sign::Plus, q),
        ));
        if negative {
            -r
        } else {
            r
        }
    }
}

/// Index of the reduced positive fraction p/q in the Calkin-Wilf tree
/// (root 1/1 has index 1; node a/b has children a/(a+b) and (a+b)/b).
fn calkin_wilf_index(mut p: BigUint, mut q: BigUint) -> BigUint {
    let one = BigUint::one();
    // Walk from the node up to the root, collecting (direction, run length)
    // pairs; runs are batched through Euclidean division.
    let mut runs: Vec<(bool, BigUint)> = Vec::new();
    loop {
        match p.cmp(&q) {
            Ordering::Equal => break, // reduced, so p == q == 1
            Ordering::Less => {
                if p.is_one() {
                    runs.push((false, &q - &one));
                    break;
                }
                let k = &q / &p;
                q %= &p;
                runs.push((false, k));
            }
            Ordering::Greater => {
                if q.is_one() {
                    runs.push((true, &p - &one));
                    break;
                }
                let k = &p / &q;
                p %= &q;
                runs.push((true, k));
            }
        }
    }
    // The index in binary is a leading 1 followed by the root-to-leaf
    // direction bits (1 = right child, 0 = left child).
    let mut index = BigUint::one();
    for (right, len) in runs.into_iter().rev() {
        let shift = len.to_u64().expect("calkin-wilf run too long");
        index <<= shift;
        if right {
            index += (BigUint::one() << shift) - BigUint::one();
        }
    }
    index
}

fn calkin_wilf_value(index: &BigUint) -> (BigUint, BigUint) {
    assert!(!index.is_zero());
    let bits = index.bits();
    let mut p = BigUint::one();
    let mut q = BigUint::one();
    // Skip the leading 1, then replay root-to-leaf directions.
    for i in (0..bits - 1).rev() {
        if index.bit(i) {
            p += &q;
        } else {
            q += &p;
        }
    }
    (p, q)
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl FromStr for Rational {
    type Err = RationalParseError;

    /// Accepts `p/q`, plain integers, and exact decimal literals
    /// (`-2.25` is `-9/4`); decimals are rationals, not floats.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err(RationalParseError::Empty);
        }
        if let Some((whole, frac)) = s.split_once('.') {
            if s.contains('/') || frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
                return Err(RationalParseError::BadInteger(s.to_string()));
            }
            let whole_int = BigInt::from_str(whole)
                .map_err(|_| RationalParseError::BadInteger(whole.to_string()))?;
            let frac_int = BigInt::from_str(frac)
                .map_err(|_| RationalParseError::BadInteger(frac.to_string()))?;
            let scale = BigInt::from(10u32).pow(frac.len() as u32);
            let negative = whole.trim_start().starts_with('-');
            let magnitude = whole_int.abs() * &scale + frac_int;
            let num = if negative { -magnitude } else { magnitude };
            return Ok(Rational(BigRational::new(num, scale)));
        }
        let (num_str, den_str) = match s.split_once('/') {
            Some((n, d)) => (n, d),
            None => (s, "1"),
        };
        let num = BigInt::from_str(num_str.trim())
            .map_err(|_| RationalParseError::BadInteger(num_str.to_string()))?;
        let den = BigInt::from_str(den_str.trim())
            .map_err(|_| RationalParseError::BadInteger(den_str.to_string()))?;
        if den.is_zero() {
            return Err(RationalParseError::ZeroDenominator);
        }
        Ok(Rational(BigRational::new(num, den)))
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(de::Error::custom)
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational((self.0).$method(rhs.0))
            }
        }
        impl<'a> $trait<&'a Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: &'a Rational) -> Rational {
                Rational((&self.0).$method(&rhs.0))
            }
        }
        impl $trait<&Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational((self.0).$method(&rhs.0))
            }
        }
        impl $trait<Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational((&self.0).$method(rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

//! Exact rationals, positive accuracies extended with `+∞`, and closed
//! rational intervals.
//!
//! Every value here is in canonical form at construction, so structural
//! equality coincides with numeric equality. There is no floating point
//! anywhere in this module.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum RationalError {
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("division by zero")]
    DivisionByZero,
    #[error("expected a strictly positive rational, got {0}")]
    NotPositive(Rational),
    #[error("interval endpoints out of order: {lo} > {hi}")]
    InvertedInterval { lo: Box<Rational>, hi: Box<Rational> },
    #[error("malformed rational literal {0:?}")]
    Malformed(String),
}

/// An exact fraction with a positive denominator, always fully reduced.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(BigRational);

impl Rational {
    pub fn new(numerator: impl Into<BigInt>, denominator: impl Into<BigInt>) -> Result<Self, RationalError> {
        let denominator = denominator.into();
        if denominator.is_zero() {
            return Err(RationalError::ZeroDenominator);
        }
        // `BigRational::new` reduces and moves the sign onto the numerator.
        Ok(Self(BigRational::new(numerator.into(), denominator)))
    }

    pub fn integer(n: impl Into<BigInt>) -> Self {
        Self(BigRational::from_integer(n.into()))
    }

    pub fn zero() -> Self {
        Self(BigRational::zero())
    }

    pub fn one() -> Self {
        Self(BigRational::one())
    }

    /// `2^exp` for any integer exponent.
    pub fn pow2(exp: i64) -> Self {
        let magnitude = BigInt::one() << exp.unsigned_abs();
        if exp >= 0 {
            Self::integer(magnitude)
        } else {
            Self(BigRational::new(BigInt::one(), magnitude))
        }
    }

    pub fn numerator(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denominator(&self) -> &BigInt {
        self.0.denom()
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

    pub fn abs(&self) -> Self {
        Self(self.0.abs())
    }

    pub fn checked_div(&self, rhs: &Self) -> Result<Self, RationalError> {
        if rhs.is_zero() {
            return Err(RationalError::DivisionByZero);
        }
        Ok(Self(&self.0 / &rhs.0))
    }

    pub fn recip(&self) -> Result<Self, RationalError> {
        Self::one().checked_div(self)
    }

    pub fn min(self, other: Self) -> Self {
        std::cmp::min(self, other)
    }

    pub fn max(self, other: Self) -> Self {
        std::cmp::max(self, other)
    }
}

impl Default for Rational {
    fn default() -> Self {
        Self::zero()
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Self::integer(n)
    }
}

impl From<BigInt> for Rational {
    fn from(n: BigInt) -> Self {
        Self::integer(n)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.denom().is_one() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

fn parse_digits(s: &str) -> Option<BigInt> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

/// Accepts `[+-]digits` or `[+-]digits/digits`; the denominator must be
/// nonzero and carries no sign of its own.
impl FromStr for Rational {
    type Err = RationalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let malformed = || RationalError::Malformed(s.to_owned());
        let (negative, body) = match s.as_bytes().first() {
            Some(b'-') => (true, &s[1..]),
            Some(b'+') => (false, &s[1..]),
            _ => (false, s),
        };
        let (num, den) = match body.split_once('/') {
            Some((n, d)) => (parse_digits(n).ok_or_else(malformed)?, parse_digits(d).ok_or_else(malformed)?),
            None => (parse_digits(body).ok_or_else(malformed)?, BigInt::one()),
        };
        let num = if negative { -num } else { num };
        Self::new(num, den)
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait<&Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational((&self.0).$method(&rhs.0))
            }
        }
        impl $trait<Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational(self.0.$method(rhs.0))
            }
        }
        impl $trait<&Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational(self.0.$method(&rhs.0))
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

/// Panics on a zero divisor, like integer division; use
/// [`Rational::checked_div`] when the divisor is not known to be nonzero.
impl Div<&Rational> for &Rational {
    type Output = Rational;
    fn div(self, rhs: &Rational) -> Rational {
        assert!(!rhs.is_zero(), "rational division by zero");
        Rational(&self.0 / &rhs.0)
    }
}

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

/// A strictly positive rational; the type of input accuracies `η` and of
/// every finite output accuracy `ε`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Positive(Rational);

impl Positive {
    pub fn new(value: Rational) -> Result<Self, RationalError> {
        if value.is_positive() {
            Ok(Self(value))
        } else {
            Err(RationalError::NotPositive(value))
        }
    }

    /// `2^-k`.
    pub fn dyadic(k: u32) -> Self {
        Self(Rational::pow2(-i64::from(k)))
    }

    pub fn one() -> Self {
        Self(Rational::one())
    }

    pub fn get(&self) -> &Rational {
        &self.0
    }

    pub fn into_inner(self) -> Rational {
        self.0
    }

    pub fn double(&self) -> Self {
        Self(&self.0 + &self.0)
    }

    pub fn half(&self) -> Self {
        Self(&self.0 * &Rational::pow2(-1))
    }

    /// Divides by a positive integer factor.
    pub fn scale_down(&self, factor: u32) -> Self {
        assert!(factor > 0, "scale factor must be positive");
        Self(&self.0 / &Rational::from(i64::from(factor)))
    }
}

impl Add for &Positive {
    type Output = Positive;
    fn add(self, rhs: &Positive) -> Positive {
        Positive(&self.0 + &rhs.0)
    }
}

impl Mul for &Positive {
    type Output = Positive;
    fn mul(self, rhs: &Positive) -> Positive {
        Positive(&self.0 * &rhs.0)
    }
}

impl fmt::Display for Positive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl FromStr for Positive {
    type Err = RationalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::new(s.parse()?)
    }
}

impl TryFrom<Rational> for Positive {
    type Error = RationalError;
    fn try_from(value: Rational) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

/// A positive rational accuracy or `+∞`. Every finite value is below `+∞`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExtAccuracy {
    Finite(Positive),
    Infinity,
}

impl ExtAccuracy {
    pub fn finite(value: Rational) -> Result<Self, RationalError> {
        Positive::new(value).map(Self::Finite)
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Self::Infinity)
    }

    pub fn as_finite(&self) -> Option<&Positive> {
        match self {
            Self::Finite(p) => Some(p),
            Self::Infinity => None,
        }
    }

    pub fn min(self, other: Self) -> Self {
        std::cmp::min(self, other)
    }

    pub fn max(self, other: Self) -> Self {
        std::cmp::max(self, other)
    }
}

impl From<Positive> for ExtAccuracy {
    fn from(p: Positive) -> Self {
        Self::Finite(p)
    }
}

impl fmt::Display for ExtAccuracy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(p) => p.fmt(f),
            Self::Infinity => f.write_str("inf"),
        }
    }
}

/// A closed interval `[lo, hi]` with `lo <= hi`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Interval {
    lo: Rational,
    hi: Rational,
}

impl Interval {
    pub fn new(lo: Rational, hi: Rational) -> Result<Self, RationalError> {
        if lo > hi {
            return Err(RationalError::InvertedInterval { lo: Box::new(lo), hi: Box::new(hi) });
        }
        Ok(Self { lo, hi })
    }

    /// The ball `[q - eta, q + eta]`.
    pub fn ball(q: &Rational, eta: &Positive) -> Self {
        Self {
            lo: q - eta.get(),
            hi: q + eta.get(),
        }
    }

    pub fn lo(&self) -> &Rational {
        &self.lo
    }

    pub fn hi(&self) -> &Rational {
        &self.hi
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn midpoint(&self) -> Rational {
        (&self.lo + &self.hi) * Rational::pow2(-1)
    }

    pub fn contains(&self, x: &Rational) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// Center and radius; `None` for a degenerate point interval.
    pub fn to_ball(&self) -> Option<(Rational, Positive)> {
        let radius = Positive::new(self.width() * Rational::pow2(-1)).ok()?;
        Some((self.midpoint(), radius))
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// `[q - eta, q + eta]`: the set of reals that `q` approximates up to `eta`.
pub fn interval_of(q: &Rational, eta: &Positive) -> Interval {
    Interval::ball(q, eta)
}

/// Shorthand constructor; panics on a zero denominator. For literals.
pub fn rat(numerator: i64, denominator: i64) -> Rational {
    Rational::new(numerator, denominator).expect("nonzero denominator")
}

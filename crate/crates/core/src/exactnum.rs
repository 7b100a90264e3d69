//! Exact arithmetic: arbitrary-precision rationals and values of the form
//! `r * pi^(k/2)`, which is the closed set produced by gamma functions at
//! half-integer arguments.

use std::cmp::Ordering;
use std::fmt;
use std::iter::{Product, Sum};
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Arbitrary-precision rational number, always in lowest terms with a
/// positive denominator.
///
/// Serializes as the string `"numerator/denominator"`; integers drop the
/// `/1` suffix (`"16/7"`, `"-1"`, `"0"`).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rational(BigRational);

impl Rational {
    pub fn new(numer: impl Into<BigInt>, denom: impl Into<BigInt>) -> Result<Self> {
        let denom = denom.into();
        if denom.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Rational(BigRational::new(numer.into(), denom)))
    }

    pub fn from_integer(n: impl Into<BigInt>) -> Self {
        Rational(BigRational::from_integer(n.into()))
    }

    /// Convenience for small literals; panics on a zero denominator.
    pub fn frac(numer: i64, denom: i64) -> Self {
        Self::new(numer, denom).expect("nonzero denominator")
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
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

    pub fn recip(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Rational(self.0.recip()))
    }

    pub fn checked_div(&self, rhs: &Rational) -> Result<Self> {
        if rhs.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Rational(&self.0 / &rhs.0))
    }

    /// Integer power; negative exponents invert (zero base is an error then).
    pub fn pow(&self, exp: i32) -> Result<Self> {
        if exp < 0 && self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Rational(Pow::pow(&self.0, exp)))
    }

    /// Correctly rounded conversion to the nearest `f64`.
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn as_big_rational(&self) -> &BigRational {
        &self.0
    }

    pub fn into_big_rational(self) -> BigRational {
        self.0
    }
}

impl From<BigRational> for Rational {
    fn from(r: BigRational) -> Self {
        Rational(r)
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::from_integer(n)
    }
}

impl From<u64> for Rational {
    fn from(n: u64) -> Self {
        Rational::from_integer(n)
    }
}

impl From<BigInt> for Rational {
    fn from(n: BigInt) -> Self {
        Rational::from_integer(n)
    }
}

impl From<BigUint> for Rational {
    fn from(n: BigUint) -> Self {
        Rational::from_integer(BigInt::from(n))
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for Rational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let parse = |t: &str| {
            t.trim()
                .parse::<BigInt>()
                .map_err(|e| Error::Parse(format!("{t:?}: {e}")))
        };
        match s.split_once('/') {
            Some((n, d)) => Rational::new(parse(n)?, parse(d)?),
            None => Ok(Rational::from_integer(parse(s)?)),
        }
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait<Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational(self.0.$method(rhs.0))
            }
        }
        impl<'a> $trait<&'a Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &'a Rational) -> Rational {
                Rational(self.0.$method(&rhs.0))
            }
        }
        impl<'a> $trait<Rational> for &'a Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational((&self.0).$method(rhs.0))
            }
        }
        impl<'a, 'b> $trait<&'b Rational> for &'a Rational {
            type Output = Rational;
            fn $method(self, rhs: &'b Rational) -> Rational {
                Rational((&self.0).$method(&rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
// Panics on a zero divisor, like the integer types; use `checked_div` for a Result.
forward_binop!(Div, div);

impl AddAssign<&Rational> for Rational {
    fn add_assign(&mut self, rhs: &Rational) {
        self.0 += &rhs.0;
    }
}

impl AddAssign for Rational {
    fn add_assign(&mut self, rhs: Rational) {
        self.0 += rhs.0;
    }
}

impl SubAssign<&Rational> for Rational {
    fn sub_assign(&mut self, rhs: &Rational) {
        self.0 -= &rhs.0;
    }
}

impl MulAssign<&Rational> for Rational {
    fn mul_assign(&mut self, rhs: &Rational) {
        self.0 *= &rhs.0;
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

impl Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Rational {
        iter.fold(Rational::zero(), |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a Rational> for Rational {
    fn sum<I: Iterator<Item = &'a Rational>>(iter: I) -> Rational {
        iter.fold(Rational::zero(), |acc, x| acc + x)
    }
}

impl Product for Rational {
    fn product<I: Iterator<Item = Rational>>(iter: I) -> Rational {
        iter.fold(Rational::one(), |acc, x| acc * x)
    }
}

/// `n!` as a big integer.
pub fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * k)
}

/// `binom(n, k)` as a big integer (zero when `k > n`).
pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    (0..k).fold(BigInt::one(), |acc, i| acc * (n - i) / (i + 1))
}

/// The value `coeff * pi^(pi_half_exponent / 2)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PiPower {
    coeff: Rational,
    pi_half_exponent: i32,
}

impl PiPower {
    pub fn new(coeff: Rational, pi_half_exponent: i32) -> Self {
        // Zero has no meaningful pi content; normalizing keeps equality structural.
        let pi_half_exponent = if coeff.is_zero() { 0 } else { pi_half_exponent };
        PiPower {
            coeff,
            pi_half_exponent,
        }
    }

    pub fn rational(coeff: Rational) -> Self {
        Self::new(coeff, 0)
    }

    pub fn coeff(&self) -> &Rational {
        &self.coeff
    }

    pub fn pi_half_exponent(&self) -> i32 {
        self.pi_half_exponent
    }

    /// Multiplies by `pi^(k/2)`.
    pub fn times_sqrt_pi_power(&self, k: i32) -> PiPower {
        PiPower::new(self.coeff.clone(), self.pi_half_exponent + k)
    }

    pub fn checked_div(&self, rhs: &PiPower) -> Result<PiPower> {
        Ok(PiPower::new(
            self.coeff.checked_div(&rhs.coeff)?,
            self.pi_half_exponent - rhs.pi_half_exponent,
        ))
    }

    pub fn to_f64(&self) -> f64 {
        self.coeff.to_f64() * std::f64::consts::PI.powf(self.pi_half_exponent as f64 / 2.0)
    }

    /// Exact rational value; fails unless the pi exponent is zero.
    pub fn to_rational(&self) -> Result<Rational> {
        pipower_to_rational(self)
    }
}

impl Mul for PiPower {
    type Output = PiPower;
    fn mul(self, rhs: PiPower) -> PiPower {
        PiPower::new(
            self.coeff * rhs.coeff,
            self.pi_half_exponent + rhs.pi_half_exponent,
        )
    }
}

impl<'a> Mul<&'a PiPower> for &'a PiPower {
    type Output = PiPower;
    fn mul(self, rhs: &'a PiPower) -> PiPower {
        PiPower::new(
            &self.coeff * &rhs.coeff,
            self.pi_half_exponent + rhs.pi_half_exponent,
        )
    }
}

impl Product for PiPower {
    fn product<I: Iterator<Item = PiPower>>(iter: I) -> PiPower {
        iter.fold(PiPower::rational(Rational::one()), |acc, x| acc * x)
    }
}

impl fmt::Display for PiPower {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.pi_half_exponent {
            0 => write!(f, "{}", self.coeff),
            k if k % 2 == 0 => write!(f, "{}*pi^{}", self.coeff, k / 2),
            k => write!(f, "{}*pi^({}/2)", self.coeff, k),
        }
    }
}

impl fmt::Debug for PiPower {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PiPower({self})")
    }
}

impl PartialOrd for PiPower {
    /// Only values with the same pi content are comparable exactly.
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        (self.pi_half_exponent == other.pi_half_exponent).then(|| self.coeff.cmp(&other.coeff))
    }
}

/// `Gamma(k/2)` for a positive integer `k`.
///
/// Even `k` gives `(k/2 - 1)!`; odd `k` gives a rational multiple of `sqrt(pi)`
/// obtained from `Gamma(1/2) = sqrt(pi)` and `Gamma(x + 1) = x Gamma(x)`.
pub fn gamma_half(k: i64) -> Result<PiPower> {
    if k <= 0 {
        return Err(Error::Domain(format!(
            "gamma_half({k}): Gamma has poles at nonpositive half-integers"
        )));
    }
    let k = k as u64;
    if k.is_multiple_of(2) {
        return Ok(PiPower::rational(Rational::from_integer(factorial(
            k / 2 - 1,
        ))));
    }
    // Gamma(k/2) = sqrt(pi) * prod_{i=0}^{(k-3)/2} (2i + 1)/2
    let steps = (k - 1) / 2;
    let mut coeff = Rational::one();
    for i in 0..steps {
        coeff = coeff * Rational::frac(2 * i as i64 + 1, 2);
    }
    Ok(PiPower::new(coeff, 1))
}

/// Exact `Gamma(x)` when `2x` is a positive integer.
pub fn gamma_rational(x: &Rational) -> Option<PiPower> {
    let twice = x * Rational::from_integer(2);
    if !twice.is_integer() || !twice.is_positive() {
        return None;
    }
    twice.numer().to_i64().and_then(|k| gamma_half(k).ok())
}

pub fn pipower_to_rational(v: &PiPower) -> Result<Rational> {
    if v.pi_half_exponent != 0 {
        return Err(Error::Irrational {
            pi_half_exponent: v.pi_half_exponent,
        });
    }
    Ok(v.coeff.clone())
}

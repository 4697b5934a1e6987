//! Arithmetic modes.
//!
//! Every algorithm in the crate is generic over [`Scalar`]. Two modes exist:
//! exact rationals ([`Rational`]), where all tolerances are zero and every
//! identity is checked bit-for-bit, and `f64`, where comparisons go through
//! explicit tolerances.

use std::cmp::Ordering;
use std::fmt::{self, Debug, Display};
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

pub type Rational = BigRational;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Rational,
    Float,
}

impl Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Rational => f.write_str("rational"),
            Mode::Float => f.write_str("float"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse {0:?} as a number")]
pub struct ParseScalarError(pub String);

pub trait Scalar:
    Clone
    + Debug
    + Display
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    const MODE: Mode;

    fn from_i64(v: i64) -> Self;

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_i64(num) / Self::from_i64(den)
    }

    fn from_rational(r: &Rational) -> Self;

    /// Parses `"p/q"`, integers and decimal literals (`"-0.125"`, `"1e-3"`).
    fn parse(s: &str) -> Result<Self, ParseScalarError>;

    fn to_f64(&self) -> f64;

    /// The exact value, when the representation is exact.
    fn as_rational(&self) -> Option<Rational> {
        None
    }

    /// Canonical text form: `"p/q"` for rationals, shortest round-trip for floats.
    fn render(&self) -> String;

    fn to_json(&self) -> serde_json::Value;

    fn abs(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    /// Slack allowed on the total mass of a marginal.
    fn mass_tol() -> Self;

    /// Default tolerance for identities (gap, slackness, feasibility).
    fn default_tol() -> Self;

    /// Cells with mass at or below this threshold are outside the support.
    fn support_tol() -> Self;

    fn is_exact() -> bool {
        Self::MODE == Mode::Rational
    }
}

fn parse_decimal(s: &str) -> Option<Rational> {
    let s = s.trim();
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match digits.find('.') {
        Some(pos) => (&digits[..pos], &digits[pos + 1..]),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all_digits = format!("{int_part}{frac_part}");
    let numer: BigInt = all_digits.parse().ok()?;
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10u32);
    let mut value = if scale >= 0 {
        Rational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    if negative {
        value = -value;
    }
    Some(value)
}

pub fn parse_rational(s: &str) -> Result<Rational, ParseScalarError> {
    let err = || ParseScalarError(s.to_string());
    let t = s.trim();
    if let Some((p, q)) = t.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| err())?;
        let q: BigInt = q.trim().parse().map_err(|_| err())?;
        if q.is_zero() {
            return Err(err());
        }
        return Ok(Rational::new(p, q));
    }
    parse_decimal(t).ok_or_else(err)
}

impl Scalar for Rational {
    const MODE: Mode = Mode::Rational;

    fn from_i64(v: i64) -> Self {
        Rational::from_integer(BigInt::from(v))
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }

    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }

    fn parse(s: &str) -> Result<Self, ParseScalarError> {
        parse_rational(s)
    }

    fn as_rational(&self) -> Option<Rational> {
        Some(self.clone())
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn render(&self) -> String {
        format!("{}/{}", self.numer(), self.denom())
    }

    fn to_json(&self) -> serde_json::Value {
        serde_json::Value::String(self.render())
    }

    fn abs(&self) -> Self {
        Signed::abs(self)
    }

    fn mass_tol() -> Self {
        Self::zero()
    }

    fn default_tol() -> Self {
        Self::zero()
    }

    fn support_tol() -> Self {
        Self::zero()
    }
}

impl Scalar for f64 {
    const MODE: Mode = Mode::Float;

    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn from_rational(r: &Rational) -> Self {
        ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }

    fn parse(s: &str) -> Result<Self, ParseScalarError> {
        let t = s.trim();
        let value = if t.contains('/') {
            ToPrimitive::to_f64(&parse_rational(t)?)
        } else {
            f64::from_str(t).ok()
        };
        value
            .filter(|v| v.is_finite())
            .ok_or_else(|| ParseScalarError(s.to_string()))
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn render(&self) -> String {
        format!("{self:?}")
    }

    fn to_json(&self) -> serde_json::Value {
        serde_json::Number::from_f64(*self)
            .map(serde_json::Value::Number)
            .unwrap_or(serde_json::Value::Null)
    }

    fn abs(&self) -> Self {
        f64::abs(*self)
    }

    fn mass_tol() -> Self {
        1e-12
    }

    fn default_tol() -> Self {
        1e-9
    }

    fn support_tol() -> Self {
        1e-12
    }
}

pub fn max_of<T: Scalar>(a: T, b: T) -> T {
    if b > a {
        b
    } else {
        a
    }
}

pub fn min_of<T: Scalar>(a: T, b: T) -> T {
    if b < a {
        b
    } else {
        a
    }
}

/// A value in `(-inf, +inf]`. Costs may be `+inf`; nothing in the crate
/// produces `-inf`.
#[derive(Debug, Clone, PartialEq)]
pub enum Extended<T> {
    Finite(T),
    Infinite,
}

impl<T: Scalar> Extended<T> {
    pub fn zero() -> Self {
        Extended::Finite(T::zero())
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Extended::Finite(_))
    }

    pub fn finite(&self) -> Option<&T> {
        match self {
            Extended::Finite(v) => Some(v),
            Extended::Infinite => None,
        }
    }

    pub fn into_finite(self) -> Option<T> {
        match self {
            Extended::Finite(v) => Some(v),
            Extended::Infinite => None,
        }
    }

    /// `mass * self` with the convention `0 * inf = 0`.
    pub fn weighted(&self, mass: &T) -> Self {
        match self {
            Extended::Finite(v) => Extended::Finite(v.clone() * mass.clone()),
            Extended::Infinite if mass.is_zero() => Self::zero(),
            Extended::Infinite => Extended::Infinite,
        }
    }

    pub fn add_finite(&self, rhs: &T) -> Self {
        match self {
            Extended::Finite(v) => Extended::Finite(v.clone() + rhs.clone()),
            Extended::Infinite => Extended::Infinite,
        }
    }

    pub fn min_with(&self, cap: &T) -> T {
        match self {
            Extended::Finite(v) if v < cap => v.clone(),
            _ => cap.clone(),
        }
    }

    pub fn render(&self) -> String {
        match self {
            Extended::Finite(v) => v.render(),
            Extended::Infinite => "inf".to_string(),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Extended::Finite(v) => v.to_json(),
            Extended::Infinite => serde_json::Value::String("inf".to_string()),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Extended::Finite(v) => v.to_f64(),
            Extended::Infinite => f64::INFINITY,
        }
    }
}

impl<T: Scalar> Add for Extended<T> {
    type Output = Extended<T>;

    fn add(self, rhs: Self) -> Self {
        match (self, rhs) {
            (Extended::Finite(a), Extended::Finite(b)) => Extended::Finite(a + b),
            _ => Extended::Infinite,
        }
    }
}

impl<T: Scalar> PartialOrd for Extended<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Extended::Finite(a), Extended::Finite(b)) => a.partial_cmp(b),
            (Extended::Finite(_), Extended::Infinite) => Some(Ordering::Less),
            (Extended::Infinite, Extended::Finite(_)) => Some(Ordering::Greater),
            (Extended::Infinite, Extended::Infinite) => Some(Ordering::Equal),
        }
    }
}

impl<T: Scalar> Display for Extended<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl<T: Scalar> From<T> for Extended<T> {
    fn from(v: T) -> Self {
        Extended::Finite(v)
    }
}

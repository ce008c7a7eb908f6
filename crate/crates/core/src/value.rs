//! Shared numeric types: arbitrary-precision rationals and the tagged
//! exact/approximate value returned by state evaluation.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

/// Arbitrary-precision rational number.
pub type Rat = BigRational;

/// Builds a rational from an integer numerator and denominator.
///
/// Panics if `den` is zero.
pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

/// Builds an integer rational.
pub fn rat_int(num: i64) -> Rat {
    Rat::from_integer(BigInt::from(num))
}

/// Converts a rational to the nearest `f64`.
pub fn rat_to_f64(value: &Rat) -> f64 {
    value.to_f64().unwrap_or_else(|| {
        let scale = BigInt::from(1_u64 << 53);
        let scaled = (value * Rat::from_integer(scale.clone())).round().to_integer();
        scaled.to_f64().unwrap_or(f64::NAN) / scale.to_f64().unwrap()
    })
}

/// Raises a positive rational to an integer power (negative exponents invert).
pub fn rat_pow(base: &Rat, exp: &BigInt) -> Rat {
    let e = exp
        .to_i64()
        .expect("exponent magnitude exceeds supported range");
    if e >= 0 {
        pow_u(base, e as u64)
    } else {
        pow_u(base, e.unsigned_abs()).recip()
    }
}

fn pow_u(base: &Rat, mut e: u64) -> Rat {
    let mut acc = Rat::one();
    let mut sq = base.clone();
    while e > 0 {
        if e & 1 == 1 {
            acc *= &sq;
        }
        e >>= 1;
        if e > 0 {
            sq = &sq * &sq;
        }
    }
    acc
}

/// Parses a rational from a decimal integer or `p/q` string.
pub fn rat_from_str(text: &str) -> Result<Rat, String> {
    Rat::from_str(text.trim()).map_err(|e| format!("invalid rational {text:?}: {e}"))
}

/// Formats a rational as a decimal integer or `p/q` string.
pub fn rat_to_string(value: &Rat) -> String {
    value.to_string()
}

/// Serde adapter storing a `Rat` as a `"p/q"` string.
pub mod rat_string {
    use super::*;

    pub fn serialize<S: Serializer>(value: &Rat, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&rat_to_string(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Rat, D::Error> {
        let text = String::deserialize(de)?;
        rat_from_str(&text).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter storing a `Vec<Rat>` as `"p/q"` strings.
pub mod rat_string_vec {
    use super::*;

    pub fn serialize<S: Serializer>(values: &[Rat], ser: S) -> Result<S::Ok, S::Error> {
        let strings: Vec<String> = values.iter().map(rat_to_string).collect();
        strings.serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<Rat>, D::Error> {
        let strings = Vec::<String>::deserialize(de)?;
        strings
            .iter()
            .map(|s| rat_from_str(s).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Serde adapter storing a `Vec<Vec<Rat>>` as nested `"p/q"` strings.
pub mod rat_string_mat {
    use super::*;

    pub fn serialize<S: Serializer>(values: &[Vec<Rat>], ser: S) -> Result<S::Ok, S::Error> {
        let strings: Vec<Vec<String>> = values
            .iter()
            .map(|row| row.iter().map(rat_to_string).collect())
            .collect();
        strings.serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<Vec<Rat>>, D::Error> {
        let strings = Vec::<Vec<String>>::deserialize(de)?;
        strings
            .iter()
            .map(|row| {
                row.iter()
                    .map(|s| rat_from_str(s).map_err(serde::de::Error::custom))
                    .collect()
            })
            .collect()
    }
}

/// A state-evaluation result, either exact or a Monte-Carlo estimate.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Exact(Rat),
    Approx(f64),
}

impl Value {
    pub fn zero() -> Self {
        Value::Exact(Rat::zero())
    }

    pub fn one() -> Self {
        Value::Exact(Rat::one())
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Value::Exact(_))
    }

    /// Numeric value as `f64`, exact values converted.
    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Exact(r) => rat_to_f64(r),
            Value::Approx(x) => *x,
        }
    }

    /// Exact payload, if this value is exact.
    pub fn as_exact(&self) -> Option<&Rat> {
        match self {
            Value::Exact(r) => Some(r),
            Value::Approx(_) => None,
        }
    }

    /// True when the value is exactly zero (exact) or zero as a float.
    pub fn is_zero(&self) -> bool {
        match self {
            Value::Exact(r) => r.is_zero(),
            Value::Approx(x) => *x == 0.0,
        }
    }

    /// True when the value is exactly one (exact) or one as a float.
    pub fn is_one(&self) -> bool {
        match self {
            Value::Exact(r) => r.is_one(),
            Value::Approx(x) => *x == 1.0,
        }
    }

    /// True when the value is strictly positive.
    pub fn is_positive(&self) -> bool {
        match self {
            Value::Exact(r) => r.is_positive(),
            Value::Approx(x) => *x > 0.0,
        }
    }

    /// Absolute difference from another value, exact when both are exact.
    pub fn abs_diff(&self, other: &Value) -> Value {
        match (self, other) {
            (Value::Exact(a), Value::Exact(b)) => Value::Exact((a - b).abs()),
            _ => Value::Approx((self.to_f64() - other.to_f64()).abs()),
        }
    }

    /// Whether `|self - other| <= tol`; exact comparison when both sides are
    /// exact and `tol` is zero.
    pub fn within(&self, other: &Value, tol: &Rat) -> bool {
        match (self, other) {
            (Value::Exact(a), Value::Exact(b)) => (a - b).abs() <= *tol,
            _ => (self.to_f64() - other.to_f64()).abs() <= rat_to_f64(tol),
        }
    }

    /// Total order on values, comparing through `f64` when either side is
    /// approximate.
    pub fn cmp_value(&self, other: &Value) -> Ordering {
        match (self, other) {
            (Value::Exact(a), Value::Exact(b)) => a.cmp(b),
            _ => self
                .to_f64()
                .partial_cmp(&other.to_f64())
                .unwrap_or(Ordering::Equal),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Exact(r) => write!(f, "{r}"),
            Value::Approx(x) => write!(f, "{x:.12e}"),
        }
    }
}

fn lift2(a: &Value, b: &Value, exact: impl Fn(&Rat, &Rat) -> Rat, approx: impl Fn(f64, f64) -> f64) -> Value {
    match (a, b) {
        (Value::Exact(x), Value::Exact(y)) => Value::Exact(exact(x, y)),
        _ => Value::Approx(approx(a.to_f64(), b.to_f64())),
    }
}

impl Add for &Value {
    type Output = Value;
    fn add(self, rhs: &Value) -> Value {
        lift2(self, rhs, |a, b| a + b, |a, b| a + b)
    }
}

impl Sub for &Value {
    type Output = Value;
    fn sub(self, rhs: &Value) -> Value {
        lift2(self, rhs, |a, b| a - b, |a, b| a - b)
    }
}

impl Mul for &Value {
    type Output = Value;
    fn mul(self, rhs: &Value) -> Value {
        lift2(self, rhs, |a, b| a * b, |a, b| a * b)
    }
}

impl Div for &Value {
    type Output = Value;
    fn div(self, rhs: &Value) -> Value {
        lift2(self, rhs, |a, b| a / b, |a, b| a / b)
    }
}

impl Neg for &Value {
    type Output = Value;
    fn neg(self) -> Value {
        match self {
            Value::Exact(r) => Value::Exact(-r),
            Value::Approx(x) => Value::Approx(-x),
        }
    }
}

impl From<Rat> for Value {
    fn from(r: Rat) -> Self {
        Value::Exact(r)
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Approx(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_round_trip() {
        for text in ["0", "1", "1/2", "-3/7", "22/7"] {
            let r = rat_from_str(text).unwrap();
            assert_eq!(rat_to_string(&r), text);
        }
    }

    #[test]
    fn rational_normalizes() {
        assert_eq!(rat_to_string(&rat(2, 4)), "1/2");
        assert_eq!(rat_to_string(&rat(-2, -4)), "1/2");
    }

    #[test]
    fn pow_handles_negative_exponents() {
        let half = rat(1, 2);
        assert_eq!(rat_pow(&half, &BigInt::from(3)), rat(1, 8));
        assert_eq!(rat_pow(&half, &BigInt::from(-2)), rat_int(4));
        assert_eq!(rat_pow(&half, &BigInt::from(0)), rat_int(1));
    }

    #[test]
    fn value_arithmetic_promotes() {
        let e = Value::Exact(rat(1, 2));
        let a = Value::Approx(0.25);
        assert_eq!(&e + &Value::Exact(rat(1, 3)), Value::Exact(rat(5, 6)));
        assert!(!(&e + &a).is_exact());
    }

    #[test]
    fn within_is_exact_at_zero_tolerance() {
        let a = Value::Exact(rat(1, 3));
        let b = Value::Exact(rat(1, 3));
        let c = Value::Exact(rat(1, 2));
        assert!(a.within(&b, &Rat::zero()));
        assert!(!a.within(&c, &Rat::zero()));
        assert!(a.within(&c, &rat(1, 4)));
    }
}

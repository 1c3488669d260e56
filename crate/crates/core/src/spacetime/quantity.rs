//! Exact rational quantities for positions, speeds and times.

use std::fmt;
use std::ops::Neg;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QuantityError {
    #[error("cannot parse exact quantity from {0:?}")]
    Parse(String),
    #[error("exact arithmetic overflow")]
    Overflow,
}

/// A rational number with `i128` numerator and denominator.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Exact(Ratio<i128>);

#[allow(clippy::should_implement_trait)]
impl Exact {
    pub const ZERO: Exact = Exact(Ratio::new_raw(0, 1));

    pub fn new(numer: i128, denom: i128) -> Result<Self, QuantityError> {
        if denom == 0 {
            return Err(QuantityError::Parse(format!("{numer}/0")));
        }
        Ok(Exact(Ratio::new(numer, denom)))
    }

    pub fn int(value: i128) -> Self {
        Exact(Ratio::from_integer(value))
    }

    pub fn numer(&self) -> i128 {
        *self.0.numer()
    }

    pub fn denom(&self) -> i128 {
        *self.0.denom()
    }

    pub fn add(self, rhs: Exact) -> Result<Exact, QuantityError> {
        self.0.checked_add(&rhs.0).map(Exact).ok_or(QuantityError::Overflow)
    }

    pub fn sub(self, rhs: Exact) -> Result<Exact, QuantityError> {
        self.0.checked_sub(&rhs.0).map(Exact).ok_or(QuantityError::Overflow)
    }

    pub fn mul(self, rhs: Exact) -> Result<Exact, QuantityError> {
        self.0.checked_mul(&rhs.0).map(Exact).ok_or(QuantityError::Overflow)
    }

    pub fn div(self, rhs: Exact) -> Result<Exact, QuantityError> {
        if rhs.is_zero() {
            return Err(QuantityError::Overflow);
        }
        self.0.checked_div(&rhs.0).map(Exact).ok_or(QuantityError::Overflow)
    }

    pub fn abs(self) -> Exact {
        Exact(self.0.abs())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn to_f64(&self) -> f64 {
        self.numer() as f64 / self.denom() as f64
    }

    pub fn to_big(&self) -> BigRational {
        BigRational::new(BigInt::from(self.numer()), BigInt::from(self.denom()))
    }

    /// Decimal rendering rounded half away from zero to `digits` places,
    /// trailing zeros trimmed (at least one fractional digit is kept).
    pub fn to_decimal(&self, digits: u32) -> String {
        let n = BigInt::from(self.numer());
        let d = BigInt::from(self.denom());
        let scale = BigInt::from(10u8).pow(digits);
        let scaled = n.abs() * &scale;
        let (mut q, r) = scaled.div_rem(&d);
        if r * 2u8 >= d {
            q += 1u8;
        }
        let (int_part, frac_part) = q.div_rem(&scale);
        let mut frac = format!("{:0>width$}", frac_part.to_string(), width = digits as usize);
        while frac.len() > 1 && frac.ends_with('0') {
            frac.pop();
        }
        let sign = if self.is_negative() && !(int_part.is_zero() && frac == "0") {
            "-"
        } else {
            ""
        };
        if digits == 0 {
            format!("{sign}{int_part}")
        } else {
            format!("{sign}{int_part}.{frac}")
        }
    }
}

impl Neg for Exact {
    type Output = Exact;
    fn neg(self) -> Exact {
        Exact(-self.0)
    }
}

impl fmt::Display for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denom() == 1 {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

impl fmt::Debug for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

fn pow10(exp: u32) -> Result<i128, QuantityError> {
    10i128.checked_pow(exp).ok_or(QuantityError::Overflow)
}

impl FromStr for Exact {
    type Err = QuantityError;

    /// Accepts integers, decimals, scientific notation and `a/b` fractions:
    /// `3e8`, `0.5`, `-1.25e-3`, `1/3`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || QuantityError::Parse(s.to_string());
        if let Some((a, b)) = s.split_once('/') {
            let a: Exact = a.parse()?;
            let b: Exact = b.parse()?;
            return a.div(b).map_err(|_| bad());
        }
        let (mantissa, exponent) = match s.find(['e', 'E']) {
            Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
            None => (s, 0),
        };
        let (negative, mantissa) = match mantissa.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
        };
        let (int_digits, frac_digits) = mantissa.split_once('.').unwrap_or((mantissa, ""));
        if int_digits.is_empty() && frac_digits.is_empty() {
            return Err(bad());
        }
        let all_digits = int_digits.chars().chain(frac_digits.chars());
        let mut numer: i128 = 0;
        for c in all_digits {
            let digit = c.to_digit(10).ok_or_else(bad)? as i128;
            numer = numer
                .checked_mul(10)
                .and_then(|v| v.checked_add(digit))
                .ok_or(QuantityError::Overflow)?;
        }
        if negative {
            numer = -numer;
        }
        let shift = exponent - frac_digits.len() as i32;
        let value = if shift >= 0 {
            Exact::int(numer).mul(Exact::int(pow10(shift as u32)?))?
        } else {
            Exact::new(numer, pow10(shift.unsigned_abs())?)?
        };
        Ok(value)
    }
}

impl Serialize for Exact {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Exact {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        String::deserialize(deserializer)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

macro_rules! quantity {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub Exact);

        impl $name {
            pub const ZERO: $name = $name(Exact::ZERO);
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                fmt::Display::fmt(&self.0, f)
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}({})", stringify!($name), self.0)
            }
        }

        impl FromStr for $name {
            type Err = QuantityError;
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                s.parse().map($name)
            }
        }

        impl From<Exact> for $name {
            fn from(value: Exact) -> Self {
                $name(value)
            }
        }
    };
}

quantity!(
    /// Simulation time in seconds.
    Seconds
);
quantity!(
    /// Position on the line, in meters.
    Meters
);
quantity!(
    /// Signal speed in meters per second.
    Speed
);

#[allow(clippy::should_implement_trait)]
impl Seconds {
    pub fn add(self, rhs: Seconds) -> Result<Seconds, QuantityError> {
        self.0.add(rhs.0).map(Seconds)
    }

    pub fn sub(self, rhs: Seconds) -> Result<Seconds, QuantityError> {
        self.0.sub(rhs.0).map(Seconds)
    }

    pub fn decimal(&self) -> String {
        self.0.to_decimal(12)
    }
}

impl Meters {
    pub fn distance(self, other: Meters) -> Result<Meters, QuantityError> {
        self.0.sub(other.0).map(|v| Meters(v.abs()))
    }

    pub fn half(self) -> Result<Meters, QuantityError> {
        self.0.div(Exact::int(2)).map(Meters)
    }

    /// Time a light-speed signal needs to cover this distance.
    pub fn over(self, c: Speed) -> Result<Seconds, QuantityError> {
        self.0.div(c.0).map(Seconds)
    }
}

impl Speed {
    /// Speed of light in vacuum.
    pub const LIGHT: Speed = Speed(Exact(Ratio::new_raw(299_792_458, 1)));
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(s: &str) -> Exact {
        s.parse().unwrap()
    }

    #[test]
    fn parses_common_forms() {
        assert_eq!(ex("3e8"), Exact::int(300_000_000));
        assert_eq!(ex("0.5"), Exact::new(1, 2).unwrap());
        assert_eq!(ex("-1.25e-3"), Exact::new(-1, 800).unwrap());
        assert_eq!(ex("1/3"), Exact::new(1, 3).unwrap());
        assert_eq!(ex("+7"), Exact::int(7));
        assert_eq!(ex(".5"), Exact::new(1, 2).unwrap());
        assert!("".parse::<Exact>().is_err());
        assert!("1/0".parse::<Exact>().is_err());
        assert!("abc".parse::<Exact>().is_err());
        assert!("1e99".parse::<Exact>().is_err());
    }

    #[test]
    fn display_round_trips() {
        for s in ["300000000", "1/3", "-7/2", "0"] {
            assert_eq!(ex(s).to_string(), s);
        }
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(ex("1").to_decimal(12), "1.0");
        assert_eq!(ex("1/2").to_decimal(12), "0.5");
        assert_eq!(ex("2/3").to_decimal(3), "0.667");
        assert_eq!(ex("-1/3").to_decimal(2), "-0.33");
        let d_over_c = ex("3e8").div(Speed::LIGHT.0).unwrap();
        assert_eq!(d_over_c.to_decimal(12), "1.000692285594");
    }

    #[test]
    fn overflow_is_reported() {
        let big = Exact::int(i128::MAX);
        assert_eq!(big.add(Exact::int(1)), Err(QuantityError::Overflow));
        assert_eq!(Exact::int(1).div(Exact::ZERO), Err(QuantityError::Overflow));
    }
}

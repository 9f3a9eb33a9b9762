//! Exact scale factors.
//!
//! Scales are kept as reduced `i64` rationals so that set membership in the
//! closure never depends on floating point rounding. Decimal input is parsed
//! exactly and then rounded onto a denominator bound.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_rational::Rational64;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Default denominator bound applied to user supplied reals.
pub const DEFAULT_DENOMINATOR_BOUND: i64 = 1_000_000;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Scale(Rational64);

impl Scale {
    pub const ZERO: Scale = Scale(Rational64::new_raw(0, 1));
    pub const ONE: Scale = Scale(Rational64::new_raw(1, 1));

    pub fn new(numer: i64, denom: i64) -> Self {
        Scale(Rational64::new(numer, denom))
    }

    pub fn integer(n: i64) -> Self {
        Scale(Rational64::from_integer(n))
    }

    /// `2^-k`, the shape of the default stability sequence.
    pub fn dyadic(k: u32) -> Self {
        Scale::new(1, 1i64 << k)
    }

    pub fn numer(&self) -> i64 {
        *self.0.numer()
    }

    pub fn denom(&self) -> i64 {
        *self.0.denom()
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

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    pub fn abs(&self) -> Self {
        Scale(self.0.abs())
    }

    pub fn floor_int(&self) -> i64 {
        self.0.floor().to_integer()
    }

    /// Correctly rounded for the integer ranges used here (both parts < 2^53).
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn half(&self) -> Self {
        Scale(self.0 / Rational64::from_integer(2))
    }

    /// Rounds `x` to the nearest multiple of `1 / bound`.
    pub fn from_f64_bounded(x: f64, bound: i64) -> Result<Self> {
        if !x.is_finite() {
            return Err(Error::InvalidNumber(x.to_string()));
        }
        let n = (x * bound as f64).round();
        if n.abs() >= i64::MAX as f64 / 2.0 {
            return Err(Error::InvalidNumber(x.to_string()));
        }
        Ok(Scale::new(n as i64, bound))
    }

    /// Parses a plain or exponent decimal (`"0.25"`, `"-3"`, `"1e-6"`).
    /// Values finer than `1 / bound` are rounded half away from zero.
    pub fn parse_decimal(text: &str, bound: i64) -> Result<Self> {
        let bad = || Error::InvalidNumber(text.to_string());
        let s = text.trim();
        let (mantissa, exponent) = match s.find(['e', 'E']) {
            Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().map_err(|_| bad())?),
            None => (s, 0),
        };
        let (negative, digits) = match mantissa.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
        };
        let (int_part, frac_part) = match digits.split_once('.') {
            Some((i, f)) => (i, f),
            None => (digits, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let all_digits = format!("{int_part}{frac_part}");
        let all_digits = all_digits.trim_start_matches('0');
        let scale10 = exponent - frac_part.len() as i32;
        // value = all_digits * 10^scale10
        let mut numer: i128 = if all_digits.is_empty() { 0 } else { all_digits.parse::<i128>().map_err(|_| bad())? };
        let mut denom: i128 = 1;
        if scale10 >= 0 {
            for _ in 0..scale10 {
                numer = numer.checked_mul(10).ok_or_else(bad)?;
            }
        } else {
            for _ in 0..(-scale10) {
                denom = denom.checked_mul(10).ok_or_else(bad)?;
                if denom > 1_000_000_000_000_000_000 {
                    // beyond any useful bound; drop trailing precision
                    numer /= 10;
                    denom /= 10;
                }
            }
        }
        if negative {
            numer = -numer;
        }
        let g = gcd_i128(numer.abs(), denom);
        let (numer, denom) = (numer / g.max(1), denom / g.max(1));
        let (numer, denom) = if denom > bound as i128 {
            let b = bound as i128;
            let scaled = numer * b;
            let half = denom / 2;
            let rounded = if scaled >= 0 { (scaled + half) / denom } else { -((-scaled + half) / denom) };
            (rounded, b)
        } else {
            (numer, denom)
        };
        let numer = i64::try_from(numer).map_err(|_| bad())?;
        let denom = i64::try_from(denom).map_err(|_| bad())?;
        Ok(Scale::new(numer, denom))
    }
}

fn gcd_i128(mut a: i128, mut b: i128) -> i128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl Add for Scale {
    type Output = Scale;
    fn add(self, rhs: Scale) -> Scale {
        Scale(self.0 + rhs.0)
    }
}

impl Sub for Scale {
    type Output = Scale;
    fn sub(self, rhs: Scale) -> Scale {
        Scale(self.0 - rhs.0)
    }
}

impl Mul for Scale {
    type Output = Scale;
    fn mul(self, rhs: Scale) -> Scale {
        Scale(self.0 * rhs.0)
    }
}

impl Neg for Scale {
    type Output = Scale;
    fn neg(self) -> Scale {
        Scale(-self.0)
    }
}

impl fmt::Debug for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_plain_decimals_exactly() {
        let b = DEFAULT_DENOMINATOR_BOUND;
        assert_eq!(Scale::parse_decimal("0.25", b).unwrap(), Scale::new(1, 4));
        assert_eq!(Scale::parse_decimal("-3", b).unwrap(), Scale::integer(-3));
        assert_eq!(Scale::parse_decimal("1e-6", b).unwrap(), Scale::new(1, 1_000_000));
        assert_eq!(Scale::parse_decimal("2.5E1", b).unwrap(), Scale::integer(25));
        assert_eq!(Scale::parse_decimal(".5", b).unwrap(), Scale::new(1, 2));
    }

    #[test]
    fn rounds_to_denominator_bound() {
        let s = Scale::parse_decimal("0.3333333333", 1000).unwrap();
        assert_eq!(s, Scale::new(333, 1000));
        let s = Scale::parse_decimal("-0.0015", 1000).unwrap();
        assert_eq!(s, Scale::new(-2, 1000));
    }

    #[test]
    fn rejects_garbage() {
        for bad in ["", "abc", "1.2.3", "--1", "1e"] {
            assert!(Scale::parse_decimal(bad, 10).is_err(), "{bad}");
        }
    }

    #[test]
    fn f64_round_trip_on_grid_values() {
        assert_eq!(Scale::parse_decimal("0.9", 100).unwrap().to_f64(), 0.9);
        assert_eq!(Scale::from_f64_bounded(0.125, 1000).unwrap(), Scale::new(1, 8));
    }
}

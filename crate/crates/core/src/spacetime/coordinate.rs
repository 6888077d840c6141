use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedMul, CheckedSub, Signed, Zero};
use serde::{Serialize, Serializer};

use super::SpacetimeError;

/// An exact rational position or time. Always reduced with a positive
/// denominator; arithmetic reports overflow instead of wrapping.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Coordinate(Ratio<i64>);

impl Coordinate {
    pub const ZERO: Coordinate = Coordinate(Ratio::new_raw(0, 1));

    pub fn new(numer: i64, denom: i64) -> Result<Self, SpacetimeError> {
        if denom == 0 {
            return Err(SpacetimeError::ZeroDenominator);
        }
        let (numer, denom) = if denom < 0 {
            (
                numer.checked_neg().ok_or(SpacetimeError::Overflow)?,
                denom.checked_neg().ok_or(SpacetimeError::Overflow)?,
            )
        } else {
            (numer, denom)
        };
        Ok(Self(Ratio::new(numer, denom)))
    }

    pub fn integer(value: i64) -> Self {
        Self(Ratio::from_integer(value))
    }

    pub fn numer(&self) -> i64 {
        *self.0.numer()
    }

    pub fn denom(&self) -> i64 {
        *self.0.denom()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, SpacetimeError> {
        self.0.checked_add(&other.0).map(Self).ok_or(SpacetimeError::Overflow)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self, SpacetimeError> {
        self.0.checked_sub(&other.0).map(Self).ok_or(SpacetimeError::Overflow)
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self, SpacetimeError> {
        self.0.checked_mul(&other.0).map(Self).ok_or(SpacetimeError::Overflow)
    }

    /// `|self - other|`.
    pub fn distance(&self, other: &Self) -> Result<Self, SpacetimeError> {
        let d = self.checked_sub(other)?;
        if d.0.is_negative() {
            Coordinate::ZERO.checked_sub(&d)
        } else {
            Ok(d)
        }
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        self.numer() as f64 / self.denom() as f64
    }
}

impl From<i64> for Coordinate {
    fn from(v: i64) -> Self {
        Self::integer(v)
    }
}

impl fmt::Display for Coordinate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numer(), self.denom())
    }
}

impl fmt::Debug for Coordinate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Accepts `a`, `a/b` and finite decimals such as `1.25`.
impl FromStr for Coordinate {
    type Err = SpacetimeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || SpacetimeError::Parse(s.to_string());
        if let Some((num, den)) = s.split_once('/') {
            let num = num.trim().parse::<i64>().map_err(|_| bad())?;
            let den = den.trim().parse::<i64>().map_err(|_| bad())?;
            return Coordinate::new(num, den).map_err(|e| match e {
                SpacetimeError::ZeroDenominator => bad(),
                e => e,
            });
        }
        if let Some((whole, frac)) = s.split_once('.') {
            if frac.is_empty() || !frac.bytes().all(|c| c.is_ascii_digit()) || frac.len() > 18 {
                return Err(bad());
            }
            let negative = whole.starts_with('-');
            let digits = format!("{}{}", whole.trim_start_matches(['-', '+']), frac);
            let mut num = digits.parse::<i64>().map_err(|_| bad())?;
            if negative {
                num = -num;
            }
            return Coordinate::new(num, 10i64.pow(frac.len() as u32));
        }
        s.parse::<i64>().map(Coordinate::integer).map_err(|_| bad())
    }
}

impl Serialize for Coordinate {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

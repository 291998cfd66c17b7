//! Exact rational helpers shared across the crate.
//!
//! Probabilities travel through config files as `"num/den"` strings. Plain
//! integers and finite decimals (`"0.75"`) are accepted as well and are
//! converted exactly.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{LabError, Result};

pub type Ratio = BigRational;

pub fn ratio(num: i64, den: i64) -> Ratio {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn half() -> Ratio {
    ratio(1, 2)
}

/// Parses `"3/4"`, `"2"` or `"0.75"` into an exact rational.
pub fn parse_ratio(text: &str) -> Result<Ratio> {
    let s = text.trim();
    let bad = || LabError::ParseRational(text.to_string());
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| bad())?;
        let den: BigInt = den.trim().parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(num, den));
    }
    if let Some((int_part, frac_part)) = s.split_once('.') {
        if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = int_part.starts_with('-');
        let int_digits = int_part.trim_start_matches(['-', '+']);
        let digits = format!("{int_digits}{frac_part}");
        let num: BigInt = digits.parse().map_err(|_| bad())?;
        let den = num_traits::pow(BigInt::from(10), frac_part.len());
        let value = BigRational::new(num, den);
        return Ok(if negative { -value } else { value });
    }
    let num: BigInt = s.parse().map_err(|_| bad())?;
    Ok(BigRational::from_integer(num))
}

pub fn format_ratio(value: &Ratio) -> String {
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

pub fn to_f64(value: &Ratio) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// Exact rational value of a finite float (a dyadic rational).
pub fn from_f64(value: f64) -> Result<Ratio> {
    BigRational::from_float(value).ok_or_else(|| LabError::ParseRational(value.to_string()))
}

pub fn is_probability(value: &Ratio) -> bool {
    !value.is_negative() && value <= &Ratio::one()
}

/// Least common multiple of the denominators.
pub fn common_denominator<'a>(values: impl IntoIterator<Item = &'a Ratio>) -> BigUint {
    let mut lcm = BigInt::one();
    for v in values {
        lcm = num_integer::lcm(lcm, v.denom().clone());
    }
    lcm.to_biguint().expect("denominators are positive")
}

use num_bigint::ToBigInt;

/// Numerator of `value` rescaled to the common denominator `den`.
pub fn scaled_numerator(value: &Ratio, den: &BigUint) -> BigUint {
    let den = den.to_bigint().expect("biguint fits bigint");
    let scaled = value * BigRational::from_integer(den);
    debug_assert!(scaled.is_integer());
    scaled
        .to_integer()
        .to_biguint()
        .expect("probabilities are non-negative")
}

/// Serde adapter storing a rational as a `"num/den"` string.
pub mod serde_ratio {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &Ratio, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_ratio(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Ratio, D::Error> {
        let text = String::deserialize(d)?;
        parse_ratio(&text).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for a vector of `"num/den"` strings.
pub mod serde_ratio_vec {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(values: &[Ratio], s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(values.iter().map(format_ratio))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Ratio>, D::Error> {
        let texts = Vec::<String>::deserialize(d)?;
        texts
            .iter()
            .map(|t| parse_ratio(t).map_err(serde::de::Error::custom))
            .collect()
    }
}

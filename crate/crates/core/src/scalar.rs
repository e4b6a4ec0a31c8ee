//! Coefficient scalars.
//!
//! The series ring is generic over any exact commutative field type that
//! implements [`Scalar`]. The engine itself always works with [`Rational`],
//! an arbitrary-precision rational in lowest terms.

use std::fmt::Debug;
use std::ops::Neg;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, Signed};

use crate::error::ParseRationalError;

/// Arbitrary-precision exact rational, always normalized (denominator > 0,
/// lowest terms, zero is `0/1`).
pub type Rational = BigRational;

/// Field-like coefficient type for [`crate::series::TruncatedSeries`].
pub trait Scalar:
    Num + Neg<Output = Self> + FromPrimitive + Clone + Debug + PartialEq + Send + Sync
{
}

impl<T> Scalar for T where
    T: Num + Neg<Output = T> + FromPrimitive + Clone + Debug + PartialEq + Send + Sync
{
}

/// Integer-valued rational.
pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `p/q` as a normalized rational. Panics on `q == 0`.
pub fn ratio(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

/// Canonical text form: `p/q` in lowest terms, or `p` when `q == 1`.
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses the canonical text form. Only canonical strings are accepted so that
/// `format_rational(parse_rational(s)) == s` for every accepted `s`.
pub fn parse_rational(s: &str) -> Result<Rational, ParseRationalError> {
    let bad = || ParseRationalError(s.to_string());
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n, Some(d)),
        None => (s, None),
    };
    let numer = parse_int(num).ok_or_else(bad)?;
    let value = match den {
        None => Rational::from_integer(numer),
        Some(d) => {
            if d.starts_with('-') || d.starts_with('+') {
                return Err(bad());
            }
            let denom = parse_int(d).ok_or_else(bad)?;
            if !denom.is_positive() {
                return Err(bad());
            }
            Rational::new(numer, denom)
        }
    };
    if format_rational(&value) != s {
        return Err(bad());
    }
    Ok(value)
}

fn parse_int(s: &str) -> Option<BigInt> {
    if s.is_empty() || s.starts_with('+') {
        return None;
    }
    BigInt::from_str_radix(s, 10).ok()
}

/// serde adapter storing a [`Rational`] as its canonical string.
pub mod serde_rational {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

/// serde adapter for a row-major matrix of rationals.
pub mod serde_rational_matrix {
    use super::*;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &[Vec<Rational>], s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<String>> = m
            .iter()
            .map(|row| row.iter().map(format_rational).collect())
            .collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<Rational>>, D::Error> {
        let rows = Vec::<Vec<String>>::deserialize(d)?;
        rows.iter()
            .map(|row| {
                row.iter()
                    .map(|s| parse_rational(s).map_err(serde::de::Error::custom))
                    .collect()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn formats_integers_without_denominator() {
        assert_eq!(format_rational(&rat(-7)), "-7");
        assert_eq!(format_rational(&ratio(6, 4)), "3/2");
        assert_eq!(format_rational(&ratio(3, -9)), "-1/3");
        assert_eq!(format_rational(&rat(0)), "0");
    }

    #[test]
    fn rejects_non_canonical_text() {
        for s in ["2/4", "1/1", "+1", "1/-2", "0/5", " 1", "1 /2", "", "1/0", "a"] {
            assert!(parse_rational(s).is_err(), "{s:?} accepted");
        }
        assert_eq!(parse_rational("-5/16").unwrap(), ratio(-5, 16));
    }

    proptest! {
        #[test]
        fn text_round_trip(p in -10_000i64..10_000, q in 1i64..10_000) {
            let r = ratio(p, q);
            let s = format_rational(&r);
            prop_assert_eq!(parse_rational(&s).unwrap(), r);
            prop_assert_eq!(format_rational(&parse_rational(&s).unwrap()), s);
        }
    }
}

//! Exact fixed-point decimal with four fractional digits.

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};
use thiserror::Error;

/// Number of fractional digits carried by [`Decimal`].
pub const FRACTION_DIGITS: usize = 4;

const SCALE: i64 = 10_000;

/// A fixed-point decimal stored as an integer count of ten-thousandths.
///
/// Canonical text form always carries exactly four fractional digits
/// (`38.5` renders as `38.5000`), so equal values always print identically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Decimal(i64);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecimalError {
    #[error("not a decimal literal: {0:?}")]
    Syntax(String),
    #[error("more than {FRACTION_DIGITS} fractional digits: {0:?}")]
    TooPrecise(String),
    #[error("decimal out of range: {0:?}")]
    Overflow(String),
}

impl Decimal {
    pub const ZERO: Decimal = Decimal(0);

    pub const fn from_scaled(scaled: i64) -> Self {
        Decimal(scaled)
    }

    /// The raw value in ten-thousandths.
    pub const fn scaled(self) -> i64 {
        self.0
    }

    pub fn from_int(value: i64) -> Option<Self> {
        value.checked_mul(SCALE).map(Decimal)
    }
}

impl FromStr for Decimal {
    type Err = DecimalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let syntax = || DecimalError::Syntax(s.to_string());
        let (negative, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, Some(f)),
            None => (body, None),
        };
        if int_part.is_empty() || !int_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(syntax());
        }
        let mut frac_scaled: i64 = 0;
        if let Some(frac) = frac_part {
            if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
                return Err(syntax());
            }
            if frac.len() > FRACTION_DIGITS {
                return Err(DecimalError::TooPrecise(s.to_string()));
            }
            let padded = format!("{frac:0<width$}", width = FRACTION_DIGITS);
            frac_scaled = padded.parse().map_err(|_| syntax())?;
        }
        let overflow = || DecimalError::Overflow(s.to_string());
        let int_value: i64 = int_part.parse().map_err(|_| overflow())?;
        let magnitude = int_value
            .checked_mul(SCALE)
            .and_then(|v| v.checked_add(frac_scaled))
            .ok_or_else(overflow)?;
        Ok(Decimal(if negative { -magnitude } else { magnitude }))
    }
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        let scale = SCALE as u64;
        write!(
            f,
            "{sign}{}.{:0width$}",
            abs / scale,
            abs % scale,
            width = FRACTION_DIGITS
        )
    }
}

impl Serialize for Decimal {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_and_renders_canonically() {
        let d: Decimal = "38.5".parse().unwrap();
        assert_eq!(d.scaled(), 385_000);
        assert_eq!(d.to_string(), "38.5000");
        assert_eq!("-0.25".parse::<Decimal>().unwrap().to_string(), "-0.2500");
        assert_eq!(
            "7".parse::<Decimal>().unwrap(),
            Decimal::from_int(7).unwrap()
        );
        assert_eq!(
            Decimal::from_scaled(i64::MIN).to_string(),
            "-922337203685477.5808"
        );
    }

    #[test]
    fn rejects_bad_literals() {
        assert!(matches!(
            "1.23456".parse::<Decimal>(),
            Err(DecimalError::TooPrecise(_))
        ));
        for bad in ["", "-", ".5", "5.", "+1", "1e3", "1.2.3", "abc"] {
            assert!(
                matches!(bad.parse::<Decimal>(), Err(DecimalError::Syntax(_))),
                "{bad}"
            );
        }
        assert!(matches!(
            "99999999999999999999".parse::<Decimal>(),
            Err(DecimalError::Overflow(_))
        ));
    }

    proptest! {
        #[test]
        fn display_parse_round_trip(raw in (i64::MIN + 1)..=i64::MAX) {
            let d = Decimal::from_scaled(raw);
            prop_assert_eq!(d.to_string().parse::<Decimal>().unwrap(), d);
        }
    }
}

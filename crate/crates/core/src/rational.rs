//! Exact rational scalars and their text forms.
//!
//! All counting, flattening and minor arithmetic in this crate is exact; floats
//! appear only at the spectral boundary. Rationals parse from `p/q`, plain
//! integers, or decimal literals taken at face value (`0.0606` is exactly
//! 606/10000, not the nearest double).

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

pub type Rat = num_rational::BigRational;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RationalParseError {
    #[error("empty rational literal")]
    Empty,
    #[error("invalid rational literal `{0}`")]
    Invalid(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
}

/// Shorthand for small constants.
pub fn rat(numer: i64, denom: i64) -> Rat {
    Rat::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn rat_int(value: i64) -> Rat {
    Rat::from_integer(BigInt::from(value))
}

/// Parse `p/q`, an integer, or a decimal literal, all exactly.
pub fn parse_rational(text: &str) -> Result<Rat, RationalParseError> {
    let s = text.trim();
    if s.is_empty() {
        return Err(RationalParseError::Empty);
    }
    let invalid = || RationalParseError::Invalid(text.to_string());
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num.trim().parse().map_err(|_| invalid())?;
        let d: BigInt = den.trim().parse().map_err(|_| invalid())?;
        if d.is_zero() {
            return Err(RationalParseError::ZeroDenominator(text.to_string()));
        }
        return Ok(Rat::new(n, d));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        let negative = whole.starts_with('-');
        let whole_digits = whole.trim_start_matches(['+', '-']);
        if !whole_digits.chars().all(|c| c.is_ascii_digit())
            || !frac.chars().all(|c| c.is_ascii_digit())
            || (whole_digits.is_empty() && frac.is_empty())
        {
            return Err(invalid());
        }
        let digits = format!("{}{}", whole_digits, frac);
        let numer: BigInt = if digits.is_empty() {
            BigInt::zero()
        } else {
            digits.parse().map_err(|_| invalid())?
        };
        let denom = BigInt::from(10u8).pow(frac.len() as u32);
        let value = Rat::new(numer, denom);
        return Ok(if negative { -value } else { value });
    }
    let n: BigInt = s.parse().map_err(|_| invalid())?;
    Ok(Rat::from_integer(n))
}

/// Render as `p/q` (or a bare integer when q = 1).
pub fn format_rational(r: &Rat) -> String {
    if r.denom() == &BigInt::from(1) {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Decimal rendering with five significant digits, the display style used in
/// score tables next to the exact `p/q` form.
pub fn format_decimal(r: &Rat) -> String {
    let v = to_f64(r);
    if v == 0.0 {
        return "0".to_string();
    }
    format!("{:.4e}", v)
}

pub fn is_nonnegative(r: &Rat) -> bool {
    !r.is_negative()
}

//! Exact decimal round-tripping for arbitrary-precision floats.
//!
//! Every number in the JSON interfaces is a decimal string. Values are
//! binary floats, i.e. dyadic rationals, so each has a finite exact
//! decimal expansion; writing that expansion makes the files
//! self-contained (no precision side channel is needed to re-read them
//! bit-exactly).

use rug::ops::Pow;
use rug::{Float, Integer};

use crate::error::{Error, Result};

/// Exact decimal expansion of a finite float. `2^-4` becomes `"0.0625"`.
pub fn to_exact_decimal(x: &Float) -> String {
    assert!(x.is_finite(), "only finite values are serialized");
    if x.is_zero() {
        return "0".to_string();
    }
    let (mut m, exp) = x
        .to_integer_exp()
        .expect("finite float always decomposes as m * 2^e");
    let mut e = i64::from(exp);
    // Reduce to odd mantissa so the expansion is canonical.
    if !m.is_zero() {
        let t = m.find_one(0).expect("nonzero integer has a set bit") as i64;
        if t > 0 {
            m >>= t as u32;
            e += t;
        }
    }
    let neg = m < 0;
    if neg {
        m = -m;
    }
    let body = if e >= 0 {
        (m << (e as u32)).to_string()
    } else {
        let k = (-e) as u32;
        let digits = (m * Integer::from(5).pow(k)).to_string();
        let k = k as usize;
        if digits.len() > k {
            let (int_part, frac_part) = digits.split_at(digits.len() - k);
            format!("{int_part}.{frac_part}")
        } else {
            format!("0.{}{}", "0".repeat(k - digits.len()), digits)
        }
    };
    if neg {
        format!("-{body}")
    } else {
        body
    }
}

/// Human-readable form: shortest-round-trip f64 when the value fits,
/// otherwise a 17-digit scientific string (proof-constants values can
/// exceed the f64 exponent range).
pub fn to_f64_string(x: &Float) -> String {
    let approx = x.to_f64();
    let underflowed = approx == 0.0 && !x.is_zero();
    if approx.is_finite() && !underflowed {
        format!("{approx}")
    } else {
        to_science_string(x, 17)
    }
}

/// Shortened scientific form for human-facing output (CSV trace).
pub fn to_science_string(x: &Float, digits: usize) -> String {
    if x.is_zero() {
        return "0".to_string();
    }
    let (s, exp) = x.to_string_radix(10, Some(digits)).split_exp();
    format!("{s}e{exp}")
}

trait SplitExp {
    fn split_exp(self) -> (String, i64);
}

impl SplitExp for String {
    fn split_exp(self) -> (String, i64) {
        match self.split_once('e') {
            Some((mant, exp)) => (mant.to_string(), exp.parse().unwrap_or(0)),
            None => (self, 0),
        }
    }
}

/// Parse a decimal string at a precision high enough to recover any value
/// previously written by [`to_exact_decimal`] without rounding, but never
/// below `min_prec`.
pub fn parse_decimal(s: &str, min_prec: u32) -> Result<Float> {
    let digits = s.chars().filter(|c| c.is_ascii_digit()).count().max(1);
    // A d-digit exact decimal of a dyadic needs at most ~3.33 d mantissa bits.
    let needed = (digits as u32).saturating_mul(10) / 3 + 32;
    let prec = needed.max(min_prec).max(64);
    let parsed = Float::parse(s).map_err(|e| Error::Parse(format!("bad number {s:?}: {e}")))?;
    let value = Float::with_val(prec, parsed);
    if !value.is_finite() {
        return Err(Error::Parse(format!("non-finite number {s:?}")));
    }
    Ok(value)
}

/// Parse a whole list of decimal strings with [`parse_decimal`].
pub fn parse_decimal_list(items: &[String], min_prec: u32) -> Result<Vec<Float>> {
    items.iter().map(|s| parse_decimal(s, min_prec)).collect()
}

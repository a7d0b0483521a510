//! Exact rational scalars and their text form.
//!
//! Every quantity in this crate is a `Scalar`: an arbitrary-precision
//! rational kept in lowest terms with a positive denominator. Arithmetic
//! never rounds. The text form is `"p/q"`, shortened to `"p"` when the
//! denominator is 1, and survives JSON round trips bit-exactly.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

pub type Scalar = BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScalarParseError {
    #[error("empty rational literal")]
    Empty,
    #[error("invalid integer part in rational literal `{0}`")]
    BadInteger(String),
    #[error("invalid denominator in rational literal `{0}`")]
    BadDenominator(String),
    #[error("zero denominator in rational literal `{0}`")]
    ZeroDenominator(String),
}

/// Shorthand for an integer scalar.
pub fn scalar(n: i64) -> Scalar {
    BigRational::from_integer(BigInt::from(n))
}

/// Shorthand for `p/q`. Panics on `q = 0`.
pub fn frac(p: i64, q: i64) -> Scalar {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

/// Parses `"p"` or `"p/q"`. Whitespace around either part is rejected.
pub fn parse_scalar(text: &str) -> Result<Scalar, ScalarParseError> {
    if text.is_empty() {
        return Err(ScalarParseError::Empty);
    }
    match text.split_once('/') {
        None => {
            let p: BigInt = text
                .parse()
                .map_err(|_| ScalarParseError::BadInteger(text.to_owned()))?;
            Ok(BigRational::from_integer(p))
        }
        Some((num, den)) => {
            let p: BigInt = num
                .parse()
                .map_err(|_| ScalarParseError::BadInteger(text.to_owned()))?;
            let q: BigInt = den
                .parse()
                .map_err(|_| ScalarParseError::BadDenominator(text.to_owned()))?;
            if q.is_zero() {
                return Err(ScalarParseError::ZeroDenominator(text.to_owned()));
            }
            Ok(BigRational::new(p, q))
        }
    }
}

/// Renders in the canonical `"p/q"` (or `"p"`) form.
pub fn format_scalar(value: &Scalar) -> String {
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

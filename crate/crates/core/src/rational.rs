//! Exact rational helpers shared by every solver.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::str::FromStr;

use crate::error::{Error, Result};

/// Exact rational scalar used for positions, values and thresholds.
pub type Q = BigRational;

pub fn q(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn zero() -> Q {
    Q::zero()
}

pub fn one() -> Q {
    Q::one()
}

/// `2^exp` for any integer exponent.
pub fn pow2(exp: i64) -> Q {
    let base = BigInt::from(2u32).pow(exp.unsigned_abs() as u32);
    if exp >= 0 {
        Q::from_integer(base)
    } else {
        Q::new(BigInt::one(), base)
    }
}

/// Parses `"p/q"` or `"p"`; the result is reduced.
pub fn parse_q(text: &str) -> Result<Q> {
    Q::from_str(text.trim()).map_err(|_| Error::Malformed(format!("not a rational: `{text}`")))
}

/// Canonical text form: reduced `"p/q"`, or `"p"` for integers.
pub fn format_q(value: &Q) -> String {
    value.to_string()
}

pub fn floor_to_u64(value: &Q) -> u64 {
    let floor = value.floor().to_integer();
    if floor.is_negative() {
        0
    } else {
        u64::try_from(floor).unwrap_or(u64::MAX)
    }
}

pub fn ceil_half(d: usize) -> usize {
    d.div_ceil(2)
}

pub fn min_q<'a>(a: &'a Q, b: &'a Q) -> &'a Q {
    if a <= b {
        a
    } else {
        b
    }
}

pub fn max_q<'a>(a: &'a Q, b: &'a Q) -> &'a Q {
    if a >= b {
        a
    } else {
        b
    }
}

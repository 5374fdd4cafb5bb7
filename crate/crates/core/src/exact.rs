//! Small helpers around exact rationals: construction, parsing and the
//! `p/q` text form used in every report.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serializer;

use crate::error::{Error, Result};

pub fn ratio(num: u64, den: u64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn big_ratio(num: &BigUint, den: &BigUint) -> BigRational {
    BigRational::new(BigInt::from(num.clone()), BigInt::from(den.clone()))
}

/// Parses `p/q` or `p` into a reduced rational.
pub fn parse_ratio(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let (p, q) = match s.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (s, "1"),
    };
    let p: BigInt = p.parse().map_err(|_| Error::Parse(format!("bad numerator in '{s}'")))?;
    let q: BigInt = q.parse().map_err(|_| Error::Parse(format!("bad denominator in '{s}'")))?;
    if q.is_zero() {
        return Err(Error::Parse(format!("zero denominator in '{s}'")));
    }
    Ok(BigRational::new(p, q))
}

/// `p/q` with `q > 0`, always with an explicit denominator.
pub fn fmt_ratio(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn ser_ratio<S: Serializer>(r: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&fmt_ratio(r))
}

pub fn ser_ratio_opt<S: Serializer>(
    r: &Option<BigRational>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match r {
        Some(r) => s.serialize_some(&fmt_ratio(r)),
        None => s.serialize_none(),
    }
}

pub fn ser_ratio_vec<S: Serializer>(v: &[BigRational], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(fmt_ratio))
}

pub fn ser_big<S: Serializer>(v: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

/// `{y}` for a rational `y`.
pub fn frac(y: &BigRational) -> BigRational {
    y - y.floor()
}

/// `min({y}, 1 - {y})`.
pub fn norm(y: &BigRational) -> BigRational {
    let f = frac(y);
    let g = BigRational::one() - &f;
    if f <= g { f } else { g }
}

/// Non-negative numerator and denominator of a rational in `[0, 1]`.
pub fn unsigned_parts(r: &BigRational) -> (BigUint, BigUint) {
    debug_assert!(!r.is_negative());
    (r.numer().magnitude().clone(), r.denom().magnitude().clone())
}

/// `ceil(a / b)` for unsigned integers, `b > 0`.
pub fn div_ceil(a: &BigUint, b: &BigUint) -> BigUint {
    let (q, rem) = a.div_rem(b);
    if rem.is_zero() { q } else { q + 1u32 }
}

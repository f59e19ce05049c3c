//! Exact rational helpers on top of `num`.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn frac(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn zero() -> Rational {
    Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}

/// Parses `"p"`, `"p/q"` or a finite decimal such as `"0.25"`.
pub fn parse(s: &str) -> Result<Rational> {
    let t = s.trim();
    let bad = || Error::Argument(format!("not a rational number: {s:?}"));
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((w, f)) = t.split_once('.') {
        if f.is_empty() || !f.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let neg = w.starts_with('-');
        let w = if w.is_empty() || w == "-" || w == "+" { "0" } else { w };
        let whole: BigInt = w.parse().map_err(|_| bad())?;
        let fracpart: BigInt = f.parse().map_err(|_| bad())?;
        let scale = num::pow(BigInt::from(10), f.len());
        let mut r = Rational::new(fracpart, scale);
        if neg {
            r = -r;
        }
        return Ok(Rational::from_integer(whole) + r);
    }
    let n: BigInt = t.parse().map_err(|_| bad())?;
    Ok(Rational::from_integer(n))
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// `"p"` or `"p/q"`.
pub fn to_string(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn pow(r: &Rational, e: i32) -> Rational {
    if e >= 0 {
        num::pow(r.clone(), e as usize)
    } else {
        num::pow(r.recip(), (-e) as usize)
    }
}

pub fn abs(r: &Rational) -> Rational {
    r.abs()
}

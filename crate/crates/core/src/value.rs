//! Scalars that stay exact while every input is rational.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::rational::{self, Rational};

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Exact(Rational),
    Float(f64),
}

impl Value {
    pub fn zero() -> Self {
        Value::Exact(Rational::zero())
    }

    pub fn one() -> Self {
        Value::Exact(Rational::one())
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Value::Exact(_))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Exact(r) => rational::to_f64(r),
            Value::Float(x) => *x,
        }
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        match self {
            Value::Exact(r) => Some(r),
            Value::Float(_) => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Value::Exact(r) => r.is_zero(),
            Value::Float(x) => *x == 0.0,
        }
    }

    pub fn pow(&self, e: i32) -> Value {
        match self {
            Value::Exact(r) => Value::Exact(rational::pow(r, e)),
            Value::Float(x) => Value::Float(x.powi(e)),
        }
    }

    /// Parses `p`, `p/q` or a decimal as exact, anything else `f64` accepts as a float.
    pub fn parse(s: &str) -> Result<Value> {
        match rational::parse(s) {
            Ok(r) => Ok(Value::Exact(r)),
            Err(e) => s.trim().parse::<f64>().map(Value::Float).map_err(|_| e),
        }
    }
}

impl From<Rational> for Value {
    fn from(r: Rational) -> Self {
        Value::Exact(r)
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Float(x)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Exact(r) => write!(f, "{}", rational::to_string(r)),
            Value::Float(x) => write!(f, "{x}"),
        }
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $op:tt) => {
        impl $tr<&Value> for &Value {
            type Output = Value;
            fn $m(self, rhs: &Value) -> Value {
                match (self, rhs) {
                    (Value::Exact(a), Value::Exact(b)) => Value::Exact(a $op b),
                    _ => Value::Float(self.to_f64() $op rhs.to_f64()),
                }
            }
        }
        impl $tr for Value {
            type Output = Value;
            fn $m(self, rhs: Value) -> Value {
                &self $op &rhs
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);
binop!(Div, div, /);

impl Neg for Value {
    type Output = Value;
    fn neg(self) -> Value {
        match self {
            Value::Exact(r) => Value::Exact(-r),
            Value::Float(x) => Value::Float(-x),
        }
    }
}

impl Serialize for Value {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Value::Exact(r) => s.serialize_str(&rational::to_string(r)),
            Value::Float(x) => s.serialize_f64(*x),
        }
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Int(i64),
            Float(f64),
        }
        match Raw::deserialize(d)? {
            Raw::Text(s) => Value::parse(&s).map_err(serde::de::Error::custom),
            Raw::Int(i) => Ok(Value::Exact(rational::int(i))),
            Raw::Float(x) => Ok(Value::Float(x)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::frac;

    #[test]
    fn exactness_is_contagious_only_one_way() {
        let a = Value::Exact(frac(1, 3));
        assert_eq!(&a + &a, Value::Exact(frac(2, 3)));
        assert!(!(&a * &Value::Float(2.0)).is_exact());
    }

    #[test]
    fn json_forms() {
        let v: Vec<Value> = serde_json::from_str(r#"["7/6", 2, 0.25]"#).unwrap();
        assert_eq!(v[0], Value::Exact(frac(7, 6)));
        assert_eq!(v[1], Value::Exact(frac(2, 1)));
        assert_eq!(serde_json::to_string(&v[0]).unwrap(), "\"7/6\"");
    }
}

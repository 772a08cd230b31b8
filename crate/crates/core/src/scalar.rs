//! Field elements: IEEE binary64 or exact arbitrary-precision rationals.
//!
//! Mixing the two variants in one arithmetic operation is a programming
//! error and panics; a [`Matrix`](crate::Matrix) never holds mixed kinds.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScalarKind {
    #[serde(rename = "f64")]
    F64,
    #[serde(rename = "rat")]
    Rat,
}

impl ScalarKind {
    pub fn tag(self) -> &'static str {
        match self {
            ScalarKind::F64 => "f64",
            ScalarKind::Rat => "rat",
        }
    }
}

impl std::str::FromStr for ScalarKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f64" | "float" => Ok(ScalarKind::F64),
            "rat" | "rational" => Ok(ScalarKind::Rat),
            other => Err(Error::Parse(format!("unknown scalar kind `{other}`"))),
        }
    }
}

impl fmt::Display for ScalarKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// A field element. Rationals are kept normalized by `num-rational`
/// (gcd(|p|, q) = 1, q ≥ 1).
#[derive(Clone, Debug)]
pub enum Scalar {
    F64(f64),
    Rat(BigRational),
}

impl Scalar {
    pub fn zero(kind: ScalarKind) -> Self {
        match kind {
            ScalarKind::F64 => Scalar::F64(0.0),
            ScalarKind::Rat => Scalar::Rat(BigRational::zero()),
        }
    }

    pub fn one(kind: ScalarKind) -> Self {
        match kind {
            ScalarKind::F64 => Scalar::F64(1.0),
            ScalarKind::Rat => Scalar::Rat(BigRational::one()),
        }
    }

    pub fn from_i64(v: i64, kind: ScalarKind) -> Self {
        match kind {
            ScalarKind::F64 => Scalar::F64(v as f64),
            ScalarKind::Rat => Scalar::Rat(BigRational::from_integer(BigInt::from(v))),
        }
    }

    /// `p/q` as a rational; panics on `q == 0`.
    pub fn ratio(p: i64, q: i64) -> Self {
        Scalar::Rat(BigRational::new(BigInt::from(p), BigInt::from(q)))
    }

    pub fn kind(&self) -> ScalarKind {
        match self {
            Scalar::F64(_) => ScalarKind::F64,
            Scalar::Rat(_) => ScalarKind::Rat,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::F64(v) => *v == 0.0,
            Scalar::Rat(r) => r.is_zero(),
        }
    }

    pub fn is_positive(&self) -> bool {
        match self {
            Scalar::F64(v) => *v > 0.0,
            Scalar::Rat(r) => r.is_positive(),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::F64(v) => *v,
            Scalar::Rat(r) => r.to_f64().unwrap_or(f64::NAN),
        }
    }

    /// Converts into the requested kind. Float to rational is exact
    /// (every finite binary64 is a dyadic rational).
    pub fn to_kind(&self, kind: ScalarKind) -> Self {
        match (self, kind) {
            (Scalar::F64(_), ScalarKind::F64) | (Scalar::Rat(_), ScalarKind::Rat) => self.clone(),
            (Scalar::Rat(r), ScalarKind::F64) => Scalar::F64(r.to_f64().unwrap_or(f64::NAN)),
            (Scalar::F64(v), ScalarKind::Rat) => Scalar::Rat(
                BigRational::from_float(*v).unwrap_or_else(BigRational::zero),
            ),
        }
    }

    pub fn abs(&self) -> Self {
        match self {
            Scalar::F64(v) => Scalar::F64(v.abs()),
            Scalar::Rat(r) => Scalar::Rat(r.abs()),
        }
    }

    pub fn sqrt(&self) -> Result<Self> {
        match self {
            Scalar::F64(v) => Ok(Scalar::F64(v.sqrt())),
            Scalar::Rat(_) => Err(Error::UnsupportedScalar(
                "square root of a rational scalar".into(),
            )),
        }
    }

    /// Division; `None` when the divisor is exactly zero.
    pub fn checked_div(&self, rhs: &Scalar) -> Option<Scalar> {
        if rhs.is_zero() {
            return None;
        }
        Some(match (self, rhs) {
            (Scalar::F64(a), Scalar::F64(b)) => Scalar::F64(a / b),
            (Scalar::Rat(a), Scalar::Rat(b)) => Scalar::Rat(a / b),
            _ => mixed(),
        })
    }

    pub fn recip(&self) -> Option<Scalar> {
        Scalar::one(self.kind()).checked_div(self)
    }

    /// Bit-level equality: floats compare by their IEEE bit pattern.
    pub fn bitwise_eq(&self, other: &Scalar) -> bool {
        match (self, other) {
            (Scalar::F64(a), Scalar::F64(b)) => a.to_bits() == b.to_bits(),
            (Scalar::Rat(a), Scalar::Rat(b)) => a == b,
            _ => false,
        }
    }

    pub fn parse(text: &str, kind: ScalarKind) -> Result<Self> {
        let bad = || Error::Parse(format!("bad {kind} entry `{text}`"));
        match kind {
            ScalarKind::F64 => text.parse::<f64>().map(Scalar::F64).map_err(|_| bad()),
            ScalarKind::Rat => {
                let (p, q) = match text.split_once('/') {
                    Some((p, q)) => (p, q),
                    None => (text, "1"),
                };
                let p: BigInt = p.parse().map_err(|_| bad())?;
                let q: BigInt = q.parse().map_err(|_| bad())?;
                if q.is_zero() {
                    return Err(bad());
                }
                Ok(Scalar::Rat(BigRational::new(p, q)))
            }
        }
    }
}

#[cold]
fn mixed() -> ! {
    panic!("arithmetic on mixed scalar kinds")
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Scalar::F64(a), Scalar::F64(b)) => a == b,
            (Scalar::Rat(a), Scalar::Rat(b)) => a == b,
            _ => false,
        }
    }
}

/// Rationals print as `p/q` (bare `p` when q = 1); floats in shortest
/// round-trip form.
impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::F64(v) => write!(f, "{v:?}"),
            Scalar::Rat(r) => {
                if r.denom().is_one() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
        }
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $op:tt) => {
        impl<'a> $tr<&'a Scalar> for &'a Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &'a Scalar) -> Scalar {
                match (self, rhs) {
                    (Scalar::F64(a), Scalar::F64(b)) => Scalar::F64(a $op b),
                    (Scalar::Rat(a), Scalar::Rat(b)) => Scalar::Rat(a $op b),
                    _ => mixed(),
                }
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::F64(v) => Scalar::F64(-v),
            Scalar::Rat(r) => Scalar::Rat(-r),
        }
    }
}

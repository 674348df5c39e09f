//! Exact scalar arithmetic over `Q` and real quadratic extensions `Q(sqrt(d))`.
//!
//! A [`QuadScalar`] stores `a + b*sqrt(d)` with `a`, `b` arbitrary-precision
//! rationals and `d` a square-free nonnegative integer. Pure rationals are
//! canonicalized to `b = 0, d = 0`, so equality, hashing, and serialization
//! are structural. All predicates (sign, comparison, membership) are decided
//! with integer arithmetic; floating point is only reachable through
//! [`QuadScalar::to_f64`], which exists for rendering.
//!
//! Within one computation a single radicand is in play (`d = 2` for the
//! irrational-slope material, `d = 0` elsewhere). Mixing two different
//! nonzero radicands is a caller bug and is reported as
//! [`ScalarError::RadicandMismatch`] by the checked operations; the operator
//! overloads panic on it.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};
use serde::de::Error as DeError;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Arbitrary-precision rational number, always stored reduced with a
/// positive denominator.
pub type Rational = BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScalarError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("radicand mismatch: sqrt({0}) vs sqrt({1})")]
    RadicandMismatch(u32, u32),
    #[error("radicand {0} is not square-free")]
    NonSquareFreeRadicand(u32),
    #[error("cannot parse {input:?} as an exact scalar: {reason}")]
    Parse { input: String, reason: String },
}

/// Shorthand for a rational from machine integers. Panics if `den == 0`.
pub fn rat(num: i64, den: i64) -> Rational {
    assert!(den != 0, "rational with zero denominator");
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// `2^k` as an exact rational, for any sign of `k`.
pub fn pow2(k: i32) -> Rational {
    let one = BigInt::one();
    if k >= 0 {
        Rational::from_integer(one << k as usize)
    } else {
        Rational::new(one, BigInt::one() << (-k) as usize)
    }
}

/// True if `r` is a dyadic rational (denominator a power of two).
pub fn is_dyadic(r: &Rational) -> bool {
    let mut den = r.denom().clone();
    if den.is_zero() {
        return false;
    }
    while den.is_even() {
        den >>= 1;
    }
    den.is_one()
}

use num::Integer;

/// Constructs `num/den` as a reduced rational, rejecting `den == 0`.
pub fn rational_checked(num: BigInt, den: BigInt) -> Result<Rational, ScalarError> {
    if den.is_zero() {
        return Err(ScalarError::ZeroDenominator);
    }
    Ok(Rational::new(num, den))
}

/// Canonical `"p/q"` form with an explicit denominator, e.g. `"-3/2"`, `"5/1"`.
pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses `"p/q"` (or a bare integer `"p"`). Inverse of [`format_rational`].
pub fn parse_rational(s: &str) -> Result<Rational, ScalarError> {
    let s = s.trim();
    let err = |reason: &str| ScalarError::Parse {
        input: s.to_string(),
        reason: reason.to_string(),
    };
    let (num_str, den_str) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    let num = BigInt::from_str(num_str.trim()).map_err(|_| err("bad numerator"))?;
    let den_str = den_str.trim();
    if den_str.starts_with('-') || den_str.starts_with('+') {
        return Err(err("denominator must be an unsigned integer"));
    }
    let den = BigInt::from_str(den_str).map_err(|_| err("bad denominator"))?;
    if den.is_zero() {
        return Err(ScalarError::ZeroDenominator);
    }
    Ok(Rational::new(num, den))
}

fn is_square_free(d: u32) -> bool {
    if d == 0 {
        return true;
    }
    let mut d = d;
    let mut p = 2u32;
    while p.saturating_mul(p) <= d {
        if d % (p * p) == 0 {
            return false;
        }
        while d % p == 0 {
            d /= p;
        }
        p += 1;
    }
    true
}

/// An exact element `a + b*sqrt(d)` of a real quadratic field.
///
/// Canonical form: `b == 0` implies `d == 0`, and `d` is square-free with
/// `d != 1`, so structural equality coincides with numeric equality and the
/// derived `Hash` is sound.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QuadScalar {
    a: Rational,
    b: Rational,
    d: u32,
}

impl QuadScalar {
    /// Builds `a + b*sqrt(d)`, canonicalizing degenerate radicands:
    /// `b == 0` or `d == 0` collapse to a pure rational and `d == 1` folds
    /// the root into the rational part. Non-square-free `d` is rejected.
    pub fn new(a: Rational, b: Rational, d: u32) -> Result<Self, ScalarError> {
        if !is_square_free(d) {
            return Err(ScalarError::NonSquareFreeRadicand(d));
        }
        if d == 1 {
            return Ok(Self::from_rational(a + b));
        }
        if b.is_zero() || d == 0 {
            return Ok(Self::from_rational(a));
        }
        Ok(QuadScalar { a, b, d })
    }

    pub fn from_rational(a: Rational) -> Self {
        QuadScalar {
            a,
            b: Rational::zero(),
            d: 0,
        }
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_rational(Rational::from_integer(BigInt::from(n)))
    }

    /// `sqrt(d)` itself.
    pub fn sqrt_of(d: u32) -> Result<Self, ScalarError> {
        Self::new(Rational::zero(), Rational::one(), d)
    }

    pub fn zero() -> Self {
        Self::from_int(0)
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    /// Rational part `a`.
    pub fn rational_part(&self) -> &Rational {
        &self.a
    }

    /// Coefficient `b` of `sqrt(d)`; zero exactly when the value is rational.
    pub fn root_part(&self) -> &Rational {
        &self.b
    }

    /// Radicand; `0` for pure rationals.
    pub fn radicand(&self) -> u32 {
        self.d
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    /// The value as a rational, if it is one.
    pub fn as_rational(&self) -> Option<&Rational> {
        self.is_rational().then_some(&self.a)
    }

    pub fn is_integer(&self) -> bool {
        self.is_rational() && self.a.is_integer()
    }

    /// Dyadic rational: `b == 0` and the denominator of `a` is a power of two.
    pub fn is_dyadic(&self) -> bool {
        self.is_rational() && is_dyadic(&self.a)
    }

    fn unify_radicand(&self, other: &Self) -> Result<u32, ScalarError> {
        match (self.d, other.d) {
            (0, d) | (d, 0) => Ok(d),
            (x, y) if x == y => Ok(x),
            (x, y) => Err(ScalarError::RadicandMismatch(x, y)),
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, ScalarError> {
        let d = self.unify_radicand(other)?;
        Self::new(&self.a + &other.a, &self.b + &other.b, d)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self, ScalarError> {
        let d = self.unify_radicand(other)?;
        Self::new(&self.a - &other.a, &self.b - &other.b, d)
    }

    /// `(a1 + b1 r)(a2 + b2 r) = (a1 a2 + b1 b2 d) + (a1 b2 + a2 b1) r`.
    pub fn checked_mul(&self, other: &Self) -> Result<Self, ScalarError> {
        let d = self.unify_radicand(other)?;
        let dd = Rational::from_integer(BigInt::from(d));
        let a = &self.a * &other.a + &self.b * &other.b * &dd;
        let b = &self.a * &other.b + &other.a * &self.b;
        Self::new(a, b, d)
    }

    /// Division by the conjugate: `1/(a + b r) = (a - b r)/(a^2 - b^2 d)`.
    /// The norm is nonzero for nonzero values because `d` is square-free.
    pub fn checked_div(&self, other: &Self) -> Result<Self, ScalarError> {
        if other.is_zero() {
            return Err(ScalarError::DivisionByZero);
        }
        let d = self.unify_radicand(other)?;
        let dd = Rational::from_integer(BigInt::from(d));
        let norm = &other.a * &other.a - &other.b * &other.b * &dd;
        debug_assert!(!norm.is_zero(), "zero norm for nonzero quadratic scalar");
        let inv = QuadScalar {
            a: &other.a / &norm,
            b: -(&other.b / &norm),
            d: other.d,
        };
        // Re-canonicalize through new(): b may vanish in the product.
        let dd_self = QuadScalar {
            a: self.a.clone(),
            b: self.b.clone(),
            d,
        };
        dd_self.checked_mul(&inv)
    }

    /// Exact sign (`-1`, `0`, `+1`) decided with integer arithmetic.
    ///
    /// When `a` and `b` disagree in sign, `a + b sqrt(d)` has the sign of
    /// whichever of `a^2` and `b^2 d` is larger (they cannot tie: a tie
    /// would make `sqrt(d)` rational).
    pub fn sign(&self) -> i8 {
        let sa = rational_sign(&self.a);
        if self.b.is_zero() {
            return sa;
        }
        let sb = rational_sign(&self.b);
        if sa == 0 {
            return sb;
        }
        if sa == sb {
            return sa;
        }
        let dd = Rational::from_integer(BigInt::from(self.d));
        let a2 = &self.a * &self.a;
        let b2d = &self.b * &self.b * &dd;
        match a2.cmp(&b2d) {
            Ordering::Greater => sa,
            Ordering::Less => sb,
            Ordering::Equal => unreachable!("sqrt({}) cannot be rational", self.d),
        }
    }

    pub fn is_positive(&self) -> bool {
        self.sign() > 0
    }

    pub fn is_negative(&self) -> bool {
        self.sign() < 0
    }

    pub fn abs(&self) -> Self {
        if self.sign() < 0 {
            -self
        } else {
            self.clone()
        }
    }

    /// Exact comparison. Panics on mismatched nonzero radicands, which
    /// cannot occur when a single `d` is fixed for the computation.
    pub fn exact_cmp(&self, other: &Self) -> Ordering {
        let diff = self.checked_sub(other).expect("comparison across fields");
        match diff.sign() {
            -1 => Ordering::Less,
            0 => Ordering::Equal,
            1 => Ordering::Greater,
            _ => unreachable!(),
        }
    }

    /// Multiplies by `2^k` exactly.
    pub fn scale_pow2(&self, k: i32) -> Self {
        let f = pow2(k);
        QuadScalar {
            a: &self.a * &f,
            b: &self.b * &f,
            d: self.d,
        }
    }

    /// Approximate value for rendering. Never used in predicates.
    pub fn to_f64(&self) -> f64 {
        let a = big_rational_to_f64(&self.a);
        if self.b.is_zero() {
            a
        } else {
            a + big_rational_to_f64(&self.b) * (self.d as f64).sqrt()
        }
    }
}

fn rational_sign(r: &Rational) -> i8 {
    if r.is_zero() {
        0
    } else if r.is_positive() {
        1
    } else {
        -1
    }
}

fn big_rational_to_f64(r: &Rational) -> f64 {
    use num::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

impl Default for QuadScalar {
    fn default() -> Self {
        Self::zero()
    }
}

impl From<i64> for QuadScalar {
    fn from(n: i64) -> Self {
        Self::from_int(n)
    }
}

impl From<Rational> for QuadScalar {
    fn from(r: Rational) -> Self {
        Self::from_rational(r)
    }
}

impl From<&Rational> for QuadScalar {
    fn from(r: &Rational) -> Self {
        Self::from_rational(r.clone())
    }
}

impl PartialOrd for QuadScalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.exact_cmp(other))
    }
}

impl Ord for QuadScalar {
    fn cmp(&self, other: &Self) -> Ordering {
        self.exact_cmp(other)
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl $trait for &QuadScalar {
            type Output = QuadScalar;
            fn $method(self, rhs: &QuadScalar) -> QuadScalar {
                self.$checked(rhs)
                    .expect(concat!("use ", stringify!($checked), " for fallible arithmetic"))
            }
        }
        impl $trait for QuadScalar {
            type Output = QuadScalar;
            fn $method(self, rhs: QuadScalar) -> QuadScalar {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&QuadScalar> for QuadScalar {
            type Output = QuadScalar;
            fn $method(self, rhs: &QuadScalar) -> QuadScalar {
                (&self).$method(rhs)
            }
        }
        impl $trait<QuadScalar> for &QuadScalar {
            type Output = QuadScalar;
            fn $method(self, rhs: QuadScalar) -> QuadScalar {
                self.$method(&rhs)
            }
        }
    };
}

forward_binop!(Add, add, checked_add);
forward_binop!(Sub, sub, checked_sub);
forward_binop!(Mul, mul, checked_mul);
forward_binop!(Div, div, checked_div);

impl Neg for &QuadScalar {
    type Output = QuadScalar;
    fn neg(self) -> QuadScalar {
        QuadScalar {
            a: -&self.a,
            b: -&self.b,
            d: self.d,
        }
    }
}

impl Neg for QuadScalar {
    type Output = QuadScalar;
    fn neg(self) -> QuadScalar {
        -&self
    }
}

impl num::Zero for QuadScalar {
    fn zero() -> Self {
        QuadScalar::zero()
    }
    fn is_zero(&self) -> bool {
        QuadScalar::is_zero(self)
    }
}

impl num::One for QuadScalar {
    fn one() -> Self {
        QuadScalar::one()
    }
}

impl fmt::Display for QuadScalar {
    /// `"p/q"` for rationals, `"p/q + r/s*sqrt(d)"` otherwise. Round-trips
    /// bit-exactly through [`FromStr`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            write!(f, "{}", format_rational(&self.a))
        } else {
            write!(
                f,
                "{} + {}*sqrt({})",
                format_rational(&self.a),
                format_rational(&self.b),
                self.d
            )
        }
    }
}

impl FromStr for QuadScalar {
    type Err = ScalarError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let trimmed = s.trim();
        let err = |reason: &str| ScalarError::Parse {
            input: trimmed.to_string(),
            reason: reason.to_string(),
        };
        if !trimmed.contains("sqrt") {
            return Ok(Self::from_rational(parse_rational(trimmed)?));
        }
        // Shape: "A + B*sqrt(D)" where A, B are signed p/q; the spaces
        // around the separator are optional on input.
        let (left, right) = trimmed
            .rsplit_once(" + ")
            .or_else(|| {
                let cut = trimmed.find("sqrt")?;
                let idx = trimmed[..cut].rfind('+')?;
                (idx > 0).then(|| (&trimmed[..idx], &trimmed[idx + 1..]))
            })
            .ok_or_else(|| err("expected \"A + B*sqrt(D)\""))?;
        let a = parse_rational(left)?;
        let (b_str, tail) = right
            .split_once("*sqrt(")
            .ok_or_else(|| err("expected \"B*sqrt(D)\" after \" + \""))?;
        let d_str = tail
            .strip_suffix(')')
            .ok_or_else(|| err("missing closing parenthesis"))?;
        let b = parse_rational(b_str)?;
        let d: u32 = d_str
            .trim()
            .parse()
            .map_err(|_| err("radicand must be a nonnegative integer"))?;
        Self::new(a, b, d)
    }
}

impl Serialize for QuadScalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for QuadScalar {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(DeError::custom)
    }
}

/// `a + b*sqrt(2)` from machine-integer fractions; the workhorse constructor
/// for tests and the irrational-slope material.
pub fn sqrt2_combo(a_num: i64, a_den: i64, b_num: i64, b_den: i64) -> QuadScalar {
    QuadScalar::new(rat(a_num, a_den), rat(b_num, b_den), 2).expect("2 is square-free")
}

/// Pure rational as a `QuadScalar`, from machine integers.
pub fn qrat(num: i64, den: i64) -> QuadScalar {
    QuadScalar::from_rational(rat(num, den))
}

//! Exact arithmetic on numbers of the form `u + v·α`, where `u` and `v` are
//! rationals and `α = (p + q·√d) / r` is a fixed quadratic irrational in
//! `(0, 1)`.
//!
//! Every order decision reduces to the sign of `A + B·√d` with rational
//! `A`, `B`, which is decided by comparing `A²` and `B²·d` when the two
//! terms have opposite signs. No floating point is involved; [`AlphaContext::to_f64`]
//! exists only for rendering and sanity checks.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Roots;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("alpha = ({p} + {q}*sqrt({d}))/{r} is rational; an irrational alpha is required")]
    RationalAlpha { p: i64, q: i64, d: u64, r: u64 },
    #[error("alpha = ({p} + {q}*sqrt({d}))/{r} is not in the open interval (0, 1)")]
    OutOfRange { p: i64, q: i64, d: u64, r: u64 },
    #[error("alpha denominator r must be positive")]
    ZeroDenominator,
    #[error("empty interval: lower bound exceeds upper bound")]
    EmptyInterval,
    #[error("cannot parse {what} from {input:?}")]
    Parse { what: &'static str, input: String },
}

/// Integer description of `α = (p + q·√d) / r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AlphaSpec {
    pub p: i64,
    pub q: i64,
    pub d: u64,
    pub r: u64,
}

impl AlphaSpec {
    /// `α = √2 − 1`.
    pub const SQRT2_MINUS_1: AlphaSpec = AlphaSpec {
        p: -1,
        q: 1,
        d: 2,
        r: 1,
    };
    /// `α = √3 − 1`, larger than one half.
    pub const SQRT3_MINUS_1: AlphaSpec = AlphaSpec {
        p: -1,
        q: 1,
        d: 3,
        r: 1,
    };
    /// `α = (√5 − 1) / 2`, the inverse golden ratio.
    pub const INV_GOLDEN: AlphaSpec = AlphaSpec {
        p: -1,
        q: 1,
        d: 5,
        r: 2,
    };

    pub fn new(p: i64, q: i64, d: u64, r: u64) -> Self {
        AlphaSpec { p, q, d, r }
    }
}

impl Default for AlphaSpec {
    fn default() -> Self {
        AlphaSpec::SQRT2_MINUS_1
    }
}

impl fmt::Display for AlphaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.p, self.q, self.d, self.r)
    }
}

impl FromStr for AlphaSpec {
    type Err = AlgebraError;

    /// Parses `p,q,d,r`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || AlgebraError::Parse {
            what: "alpha spec p,q,d,r",
            input: s.to_string(),
        };
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 4 {
            return Err(err());
        }
        Ok(AlphaSpec {
            p: parts[0].parse().map_err(|_| err())?,
            q: parts[1].parse().map_err(|_| err())?,
            d: parts[2].parse().map_err(|_| err())?,
            r: parts[3].parse().map_err(|_| err())?,
        })
    }
}

/// The validated `α` shared by every comparison. Immutable once built.
#[derive(Debug, Clone)]
pub struct AlphaContext {
    spec: AlphaSpec,
    /// `p / r`
    rational_part: Rational,
    /// `q / r`
    surd_coeff: Rational,
    d: BigInt,
    approx: f64,
}

/// Builds the context for `spec`, rejecting rational or out-of-range `α`.
pub fn make_alpha(spec: AlphaSpec) -> Result<AlphaContext, AlgebraError> {
    AlphaContext::new(spec)
}

impl AlphaContext {
    pub fn new(spec: AlphaSpec) -> Result<Self, AlgebraError> {
        let AlphaSpec { p, q, d, r } = spec;
        if r == 0 {
            return Err(AlgebraError::ZeroDenominator);
        }
        let root = d.sqrt();
        if q == 0 || root * root == d {
            return Err(AlgebraError::RationalAlpha { p, q, d, r });
        }
        let r_big = BigInt::from(r);
        let ctx = AlphaContext {
            spec,
            rational_part: Rational::new(BigInt::from(p), r_big.clone()),
            surd_coeff: Rational::new(BigInt::from(q), r_big),
            d: BigInt::from(d),
            approx: (p as f64 + q as f64 * (d as f64).sqrt()) / r as f64,
        };
        let zero = AlgebraicPoint::zero();
        let one = AlgebraicPoint::one();
        let alpha = AlgebraicPoint::alpha();
        if ctx.compare(&alpha, &zero) != Ordering::Greater || ctx.compare(&alpha, &one) != Ordering::Less {
            return Err(AlgebraError::OutOfRange { p, q, d, r });
        }
        Ok(ctx)
    }

    pub fn spec(&self) -> AlphaSpec {
        self.spec
    }

    /// Floating approximation of `α`; never used for decisions.
    pub fn alpha_f64(&self) -> f64 {
        self.approx
    }

    /// Exact sign of `x` as an ordering against zero.
    pub fn sign(&self, x: &AlgebraicPoint) -> Ordering {
        if x.v.is_zero() {
            return x.u.cmp(&Rational::zero());
        }
        // x = A + B·√d
        let a = &x.u + &x.v * &self.rational_part;
        let b = &x.v * &self.surd_coeff;
        sign_of_surd(&a, &b, &self.d)
    }

    pub fn compare(&self, x: &AlgebraicPoint, y: &AlgebraicPoint) -> Ordering {
        if x.v == y.v {
            return x.u.cmp(&y.u);
        }
        if let Some(ord) = self.compare_small(x, y) {
            return ord;
        }
        self.sign(&(x - y))
    }

    /// Same decision as [`Self::compare`] in checked `i128` arithmetic;
    /// `None` when some intermediate value does not fit.
    fn compare_small(&self, x: &AlgebraicPoint, y: &AlgebraicPoint) -> Option<Ordering> {
        let (s_num, s_den) = small_difference(&x.u, &y.u)?;
        let (t_num, t_den) = small_difference(&x.v, &y.v)?;
        let AlphaSpec { p, q, d, r } = self.spec;
        // (x − y)·r·s_den·t_den = A + B·√d with positive scaling.
        let a = (r as i128)
            .checked_mul(s_num)?
            .checked_mul(t_den)?
            .checked_add((p as i128).checked_mul(t_num)?.checked_mul(s_den)?)?;
        let b = (q as i128).checked_mul(t_num)?.checked_mul(s_den)?;
        let sa = a.cmp(&0);
        let sb = b.cmp(&0);
        Some(match (sa, sb) {
            (_, Ordering::Equal) => sa,
            (Ordering::Equal, _) => sb,
            _ if sa == sb => sa,
            _ => {
                let a2 = a.checked_mul(a)?;
                let b2d = b.checked_mul(b)?.checked_mul(d as i128)?;
                if a2 > b2d {
                    sa
                } else {
                    sb
                }
            }
        })
    }

    /// Membership of `x` in `[lo, hi]` (closed) or `(lo, hi)` (open).
    pub fn in_interval(
        &self,
        x: &AlgebraicPoint,
        lo: &AlgebraicPoint,
        hi: &AlgebraicPoint,
        closed: bool,
    ) -> Result<bool, AlgebraError> {
        if self.compare(lo, hi) == Ordering::Greater {
            return Err(AlgebraError::EmptyInterval);
        }
        let above = self.compare(x, lo);
        let below = self.compare(x, hi);
        Ok(if closed {
            above != Ordering::Less && below != Ordering::Greater
        } else {
            above == Ordering::Greater && below == Ordering::Less
        })
    }

    /// `lo ≤ x ≤ hi`, without the interval sanity check.
    pub fn within(&self, x: &AlgebraicPoint, lo: &AlgebraicPoint, hi: &AlgebraicPoint) -> bool {
        self.compare(x, lo) != Ordering::Less && self.compare(x, hi) != Ordering::Greater
    }

    pub fn max<'a>(&self, x: &'a AlgebraicPoint, y: &'a AlgebraicPoint) -> &'a AlgebraicPoint {
        if self.compare(x, y) == Ordering::Less {
            y
        } else {
            x
        }
    }

    pub fn min<'a>(&self, x: &'a AlgebraicPoint, y: &'a AlgebraicPoint) -> &'a AlgebraicPoint {
        if self.compare(x, y) == Ordering::Greater {
            y
        } else {
            x
        }
    }

    pub fn to_f64(&self, x: &AlgebraicPoint) -> f64 {
        x.u.to_f64().unwrap_or(f64::NAN) + x.v.to_f64().unwrap_or(f64::NAN) * self.approx
    }
}

/// `x − y` as an unreduced fraction with positive denominator, if it fits.
fn small_difference(x: &Rational, y: &Rational) -> Option<(i128, i128)> {
    let (xn, xd) = (x.numer().to_i128()?, x.denom().to_i128()?);
    let (yn, yd) = (y.numer().to_i128()?, y.denom().to_i128()?);
    if xd == yd {
        return Some((xn.checked_sub(yn)?, xd));
    }
    let num = xn.checked_mul(yd)?.checked_sub(yn.checked_mul(xd)?)?;
    Some((num, xd.checked_mul(yd)?))
}

/// Sign of `a + b·√d` for non-square `d`.
fn sign_of_surd(a: &Rational, b: &Rational, d: &BigInt) -> Ordering {
    let zero = Rational::zero();
    let sa = a.cmp(&zero);
    let sb = b.cmp(&zero);
    match (sa, sb) {
        (_, Ordering::Equal) => sa,
        (Ordering::Equal, _) => sb,
        _ if sa == sb => sa,
        _ => {
            // Opposite signs: the term with the larger square wins. Equality
            // would make √d rational.
            let a2 = a * a;
            let b2d = b * b * Rational::from_integer(d.clone());
            if a2 > b2d {
                sa
            } else {
                sb
            }
        }
    }
}

/// The exact real `u + v·α`.
///
/// Rationals are kept reduced, so structural equality is numeric equality
/// (α is irrational).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AlgebraicPoint {
    pub u: Rational,
    pub v: Rational,
}

/// Hashable identity of an [`AlgebraicPoint`]; equal iff the points compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PointKey(Rational, Rational);

impl AlgebraicPoint {
    pub fn new(u: Rational, v: Rational) -> Self {
        AlgebraicPoint { u, v }
    }

    pub fn zero() -> Self {
        AlgebraicPoint::new(Rational::zero(), Rational::zero())
    }

    pub fn one() -> Self {
        AlgebraicPoint::integer(1)
    }

    pub fn alpha() -> Self {
        AlgebraicPoint::new(Rational::zero(), Rational::one())
    }

    pub fn integer(n: i64) -> Self {
        AlgebraicPoint::new(Rational::from_integer(n.into()), Rational::zero())
    }

    /// `num/den + 0·α`. Panics on `den == 0`.
    pub fn ratio(num: i64, den: i64) -> Self {
        AlgebraicPoint::new(Rational::new(num.into(), den.into()), Rational::zero())
    }

    pub fn rational(u: Rational) -> Self {
        AlgebraicPoint::new(u, Rational::zero())
    }

    /// `u + v·α` from integers.
    pub fn from_ints(u: i64, v: i64) -> Self {
        AlgebraicPoint::new(Rational::from_integer(u.into()), Rational::from_integer(v.into()))
    }

    pub fn is_rational(&self) -> bool {
        self.v.is_zero()
    }

    pub fn canonical_key(&self) -> PointKey {
        PointKey(self.u.clone(), self.v.clone())
    }

    pub fn scale(&self, k: &Rational) -> Self {
        AlgebraicPoint::new(&self.u * k, &self.v * k)
    }

    /// Reads either a rational (`"3/4"`) or a pair
    /// `"u,v"` of rationals meaning `u + v·α`.
    pub fn parse(s: &str) -> Result<Self, AlgebraError> {
        s.parse()
    }
}

/// Free-function form of [`AlgebraicPoint::canonical_key`].
pub fn canonical_key(x: &AlgebraicPoint) -> PointKey {
    x.canonical_key()
}

impl fmt::Display for AlgebraicPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.v.is_zero() {
            return write!(f, "{}", self.u);
        }
        let alpha = if self.v.is_one() {
            "α".to_string()
        } else if self.v == -Rational::one() {
            "-α".to_string()
        } else {
            format!("{}α", self.v)
        };
        if self.u.is_zero() {
            write!(f, "{alpha}")
        } else if self.v.is_negative() {
            write!(f, "{}{}", self.u, alpha)
        } else {
            write!(f, "{}+{}", self.u, alpha)
        }
    }
}

impl FromStr for AlgebraicPoint {
    type Err = AlgebraError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || AlgebraError::Parse {
            what: "point (rational or u,v pair)",
            input: s.to_string(),
        };
        let rat = |t: &str| t.trim().parse::<Rational>().map_err(|_| err());
        match s.split_once(',') {
            Some((u, v)) => Ok(AlgebraicPoint::new(rat(u)?, rat(v)?)),
            None => Ok(AlgebraicPoint::rational(rat(s)?)),
        }
    }
}

impl Add for &AlgebraicPoint {
    type Output = AlgebraicPoint;
    fn add(self, rhs: &AlgebraicPoint) -> AlgebraicPoint {
        AlgebraicPoint::new(&self.u + &rhs.u, &self.v + &rhs.v)
    }
}

impl Add for AlgebraicPoint {
    type Output = AlgebraicPoint;
    fn add(self, rhs: AlgebraicPoint) -> AlgebraicPoint {
        AlgebraicPoint::new(self.u + rhs.u, self.v + rhs.v)
    }
}

impl Sub for &AlgebraicPoint {
    type Output = AlgebraicPoint;
    fn sub(self, rhs: &AlgebraicPoint) -> AlgebraicPoint {
        AlgebraicPoint::new(&self.u - &rhs.u, &self.v - &rhs.v)
    }
}

impl Sub for AlgebraicPoint {
    type Output = AlgebraicPoint;
    fn sub(self, rhs: AlgebraicPoint) -> AlgebraicPoint {
        AlgebraicPoint::new(self.u - rhs.u, self.v - rhs.v)
    }
}

impl Neg for &AlgebraicPoint {
    type Output = AlgebraicPoint;
    fn neg(self) -> AlgebraicPoint {
        AlgebraicPoint::new(-&self.u, -&self.v)
    }
}

impl Neg for AlgebraicPoint {
    type Output = AlgebraicPoint;
    fn neg(self) -> AlgebraicPoint {
        AlgebraicPoint::new(-self.u, -self.v)
    }
}

impl Mul<&Rational> for &AlgebraicPoint {
    type Output = AlgebraicPoint;
    fn mul(self, k: &Rational) -> AlgebraicPoint {
        self.scale(k)
    }
}

/// Serde helpers writing rationals as `"n/d"` strings (`"n"` when integral).
pub mod rational_serde {
    use super::Rational;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(x)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(D::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct PointRepr {
    #[serde(with = "rational_serde")]
    u: Rational,
    #[serde(with = "rational_serde")]
    v: Rational,
}

impl Serialize for AlgebraicPoint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        PointRepr {
            u: self.u.clone(),
            v: self.v.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for AlgebraicPoint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = PointRepr::deserialize(d)?;
        Ok(AlgebraicPoint::new(r.u, r.v))
    }
}

//! Capped-precision p-adic scalars and the three supported coefficient rings.
//!
//! The crate is generic over a field of scalars `K` ([`Scalar`]): the exact
//! rational path uses [`Rat`] and the analytic path uses [`PAdic`] with capped
//! relative precision.  Coefficient rings `A ∈ {K, K[y]/(g), K[ε]/(εᵉ)}` are
//! built on top of a scalar field as [`CoeffElement`]s.

mod padic;
mod rational;
mod ring;

use std::cmp::Ordering;
use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::Result;

pub use padic::PAdic;
pub use rational::Rat;
pub use ring::{CoeffElement, CoeffRing, RingKind};

/// Extended integer valuation: a finite value or +∞ (exact zero).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Val {
    /// A finite valuation.
    Fin(i64),
    /// The valuation of an exact zero.
    Inf,
}

impl Val {
    /// Finite value, or `cap` for +∞.
    pub fn or_cap(self, cap: i64) -> i64 {
        match self {
            Val::Fin(v) => v,
            Val::Inf => cap,
        }
    }

    /// Minimum of two extended valuations.
    pub fn min(self, other: Val) -> Val {
        if self <= other {
            self
        } else {
            other
        }
    }

    /// Shift by an integer (∞ stays ∞).
    pub fn shift(self, by: i64) -> Val {
        match self {
            Val::Fin(v) => Val::Fin(v + by),
            Val::Inf => Val::Inf,
        }
    }

    /// True when the valuation is at least `threshold`.
    pub fn at_least(self, threshold: i64) -> bool {
        match self {
            Val::Fin(v) => v >= threshold,
            Val::Inf => true,
        }
    }
}

impl PartialOrd for Val {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Val {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Val::Inf, Val::Inf) => Ordering::Equal,
            (Val::Inf, _) => Ordering::Greater,
            (_, Val::Inf) => Ordering::Less,
            (Val::Fin(a), Val::Fin(b)) => a.cmp(b),
        }
    }
}

impl std::fmt::Display for Val {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Val::Fin(v) => write!(f, "{v}"),
            Val::Inf => write!(f, "+inf"),
        }
    }
}

/// How suitable an entry is as an elimination pivot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PivotQuality {
    /// Known to be zero: never a pivot.
    Zero,
    /// Usable pivot; lower `score` is preferred.  `ambiguous` marks entries
    /// whose remaining precision is too small to be trusted as nonzero.
    Pivot {
        /// Preference score (p-adic valuation, or size for exact rationals).
        score: i64,
        /// Whether the entry is within the guard band of being zero.
        ambiguous: bool,
    },
}

/// Commutative ring elements carrying their own ring context.
///
/// The arithmetic operators panic on mismatched ring contexts (a programming
/// error); fallible variants live on the concrete types.
pub trait Ring:
    Clone
    + Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    /// Additive identity of the same ring.
    fn zero_like(&self) -> Self;
    /// Multiplicative identity of the same ring.
    fn one_like(&self) -> Self;
    /// Image of a rational number in the same ring.
    fn from_rational_like(&self, q: &BigRational) -> Self;
    /// Whether the element is known to be zero (exactly, or to all available precision).
    fn is_zero_elem(&self) -> bool;
    /// Multiplicative inverse.
    fn try_inverse(&self) -> Result<Self>;
    /// Gauss valuation at `p` (minimum over coordinates).
    fn valuation(&self, p: u32) -> Val;
    /// Whether the element is a unit of the ring.
    fn is_unit(&self) -> bool;

    /// Image of an integer in the same ring.
    fn from_int_like(&self, n: i64) -> Self {
        self.from_rational_like(&BigRational::from_integer(BigInt::from(n)))
    }
    /// Scalar multiple by an integer.
    fn mul_int(&self, n: i64) -> Self {
        self.clone() * self.from_int_like(n)
    }
    /// Power with a non-negative exponent.
    fn pow_u(&self, mut e: u64) -> Self {
        let mut base = self.clone();
        let mut acc = self.one_like();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base.clone();
            }
            base = base.clone() * base;
            e >>= 1;
        }
        acc
    }
    /// Power with an integer exponent (negative exponents need a unit).
    fn pow_i(&self, e: i64) -> Result<Self> {
        if e >= 0 {
            Ok(self.pow_u(e as u64))
        } else {
            Ok(self.try_inverse()?.pow_u(e.unsigned_abs()))
        }
    }
}

/// A field of scalars: the base of every coefficient ring.
pub trait Scalar: Ring + Zero + One + 'static {
    /// Embed an exact rational number.
    fn from_rational(q: &BigRational) -> Self;
    /// The exact rational value, when known exactly.
    fn to_rational(&self) -> Option<BigRational>;
    /// Import a p-adic number (exact-only scalar types accept exact values only).
    fn from_padic(x: &PAdic) -> Option<Self>;
    /// Export as a p-adic number with (at most) `prec` relative digits.
    fn to_padic(&self, p: u32, prec: u32) -> PAdic;
    /// Pivot suitability for row reduction.
    fn pivot_quality(&self, p: u32) -> PivotQuality;

    /// Embed an integer.
    fn from_int(n: i64) -> Self {
        Self::from_rational(&BigRational::from_integer(BigInt::from(n)))
    }
}

/// p-adic valuation of a nonzero integer together with its prime-to-p part.
pub fn split_p(n: &BigInt, p: u32) -> (i64, BigInt) {
    let pb = BigInt::from(p);
    let mut m = n.clone();
    let mut v = 0;
    if m.is_zero() {
        return (0, m);
    }
    loop {
        let (q, r) = num_integer::Integer::div_rem(&m, &pb);
        if !r.is_zero() {
            break;
        }
        m = q;
        v += 1;
    }
    (v, m)
}

/// p-adic valuation of a rational number (+∞ for zero).
pub fn rational_valuation(q: &BigRational, p: u32) -> Val {
    if q.is_zero() {
        return Val::Inf;
    }
    Val::Fin(split_p(q.numer(), p).0 - split_p(q.denom(), p).0)
}

/// Whether `n` is an odd prime.
pub fn is_odd_prime(n: u32) -> bool {
    if n < 3 || n % 2 == 0 {
        return false;
    }
    let mut d = 3u32;
    while (d as u64) * (d as u64) <= n as u64 {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Rational number from a numerator and denominator.
pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Rational number from an integer.
pub fn rint(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Reduce the rational `q` (with p-integral denominator) modulo `p^k`, as an integer in [0, p^k).
pub fn rational_mod_pk(q: &BigRational, p: u32, k: u32) -> Option<BigInt> {
    let modulus = BigInt::from(p).pow(k);
    let den = q.denom().clone();
    let inv = mod_inverse(&den, &modulus)?;
    let r = (q.numer() * inv) % &modulus;
    Some(if r.is_negative() { r + modulus } else { r })
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn mod_inverse(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let e = num_integer::Integer::extended_gcd(a, m);
    if !e.gcd.is_one() && e.gcd != -BigInt::one() {
        return None;
    }
    let mut x = e.x * e.gcd.signum();
    x %= m;
    if x.is_negative() {
        x += m;
    }
    Some(x)
}

/// Generalized binomial coefficient binom(x, k) = x(x−1)…(x−k+1)/k! in any ring.
pub fn binom_ring<R: Ring>(x: &R, k: usize) -> R {
    let mut num = x.one_like();
    for i in 0..k {
        num = num * (x.clone() - x.from_int_like(i as i64));
    }
    let mut fact = BigInt::one();
    for i in 1..=k {
        fact *= BigInt::from(i);
    }
    num * x.from_rational_like(&BigRational::new(BigInt::one(), fact))
}

/// Exact generalized binomial coefficient over the rationals.
pub fn binom_rational(x: &BigRational, k: usize) -> BigRational {
    let mut acc = BigRational::one();
    for i in 0..k {
        acc = acc * (x - rint(i as i64)) / rint(i as i64 + 1);
    }
    acc
}

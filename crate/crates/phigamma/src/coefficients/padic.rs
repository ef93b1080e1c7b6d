//! p-adic numbers with capped relative precision.
//!
//! A [`PAdic`] is either an exact rational number (the exact path), an
//! approximation `p^val · unit + O(p^(val + prec))` with `unit` prime to `p`,
//! or an approximate zero `O(p^abs)` produced by cancellation.  Arithmetic
//! follows the usual `O(·)` rules, so the stored precision never exceeds
//! what the operands justify.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::{
    mod_inverse, rational_mod_pk, rational_valuation, split_p, PivotQuality, Ring, Scalar, Val,
};
use crate::error::{Error, Result};

/// Significant digits below which a pivot candidate is considered ambiguous.
pub const PIVOT_GUARD: u32 = 1;

/// A p-adic scalar with capped relative precision, or an exact rational.
#[derive(Clone, Debug, PartialEq)]
pub enum PAdic {
    /// Exact rational value (the exact fast path).
    Exact(BigRational),
    /// `p^val · unit + O(p^(val + prec))`, `unit ∈ [1, p^prec)` prime to `p`.
    Approx {
        /// The prime.
        p: u32,
        /// Valuation.
        val: i64,
        /// Unit mantissa modulo `p^prec`.
        unit: BigInt,
        /// Relative precision (number of known digits), at least 1.
        prec: u32,
    },
    /// Known only to be divisible by `p^abs`.
    Zero {
        /// The prime.
        p: u32,
        /// Absolute precision.
        abs: i64,
    },
}

/// Approximate view used internally by the arithmetic.
struct Ap {
    val: Option<i64>,
    unit: BigInt,
    abs: i64,
}

fn pk(p: u32, k: i64) -> BigInt {
    BigInt::from(p).pow(k.max(0) as u32)
}

fn normalize(p: u32, m: i64, s: BigInt, abs: i64) -> PAdic {
    let modulus = pk(p, abs - m);
    let mut s = s % &modulus;
    if s.is_negative() {
        s += &modulus;
    }
    if s.is_zero() {
        return PAdic::Zero { p, abs };
    }
    let (k, u) = split_p(&s, p);
    let prec = abs - m - k;
    let modulus = pk(p, prec);
    PAdic::Approx {
        p,
        val: m + k,
        unit: u % modulus,
        prec: prec as u32,
    }
}

impl PAdic {
    /// An exact rational.
    pub fn exact(q: BigRational) -> Self {
        PAdic::Exact(q)
    }

    /// An exact integer.
    pub fn int(n: i64) -> Self {
        PAdic::Exact(BigRational::from_integer(BigInt::from(n)))
    }

    /// The rational `q` rounded to `prec` relative digits.
    pub fn from_rational_prec(q: &BigRational, p: u32, prec: u32) -> Self {
        match rational_valuation(q, p) {
            Val::Inf => PAdic::Exact(BigRational::zero()),
            Val::Fin(v) => PAdic::Exact(q.clone()).round_abs(p, v + prec as i64),
        }
    }

    /// `p^val · unit + O(p^(val+prec))` from raw digits.
    pub fn from_digits(p: u32, val: i64, unit: BigInt, prec: u32) -> Self {
        normalize(p, val, unit, val + prec as i64)
    }

    /// The approximate zero `O(p^abs)`.
    pub fn zero_at(p: u32, abs: i64) -> Self {
        PAdic::Zero { p, abs }
    }

    /// The exact value, if this is an exact scalar.
    pub fn exact_value(&self) -> Option<&BigRational> {
        match self {
            PAdic::Exact(q) => Some(q),
            _ => None,
        }
    }

    /// The prime, if this is an approximate value.
    pub fn prime(&self) -> Option<u32> {
        match self {
            PAdic::Exact(_) => None,
            PAdic::Approx { p, .. } | PAdic::Zero { p, .. } => Some(*p),
        }
    }

    /// Valuation (a lower bound `abs` for approximate zeros).
    pub fn val(&self, p: u32) -> Val {
        match self {
            PAdic::Exact(q) => rational_valuation(q, p),
            PAdic::Approx { val, .. } => Val::Fin(*val),
            PAdic::Zero { abs, .. } => Val::Fin(*abs),
        }
    }

    /// Absolute precision (+∞ when exact).
    pub fn abs_precision(&self) -> Val {
        match self {
            PAdic::Exact(_) => Val::Inf,
            PAdic::Approx { val, prec, .. } => Val::Fin(val + *prec as i64),
            PAdic::Zero { abs, .. } => Val::Fin(*abs),
        }
    }

    /// Relative precision (`None` when exact, `Some(0)` for approximate zeros).
    pub fn rel_precision(&self) -> Option<u32> {
        match self {
            PAdic::Exact(_) => None,
            PAdic::Approx { prec, .. } => Some(*prec),
            PAdic::Zero { .. } => Some(0),
        }
    }

    /// A rational representative of the approximation.
    pub fn representative(&self) -> BigRational {
        match self {
            PAdic::Exact(q) => q.clone(),
            PAdic::Approx { p, val, unit, .. } => {
                let u = BigRational::from_integer(unit.clone());
                if *val >= 0 {
                    u * BigRational::from_integer(pk(*p, *val))
                } else {
                    u / BigRational::from_integer(pk(*p, -*val))
                }
            }
            PAdic::Zero { .. } => BigRational::zero(),
        }
    }

    /// Round to absolute precision `abs` (never increases precision).
    pub fn round_abs(&self, p: u32, abs: i64) -> Self {
        match self {
            PAdic::Exact(q) => match rational_valuation(q, p) {
                Val::Inf => PAdic::Zero { p, abs },
                Val::Fin(v) if v >= abs => PAdic::Zero { p, abs },
                Val::Fin(v) => {
                    let pv = if v >= 0 {
                        BigRational::from_integer(pk(p, v))
                    } else {
                        BigRational::new(BigInt::one(), pk(p, -v))
                    };
                    let u = q / pv;
                    let digits = rational_mod_pk(&u, p, (abs - v) as u32)
                        .expect("unit part is p-integral");
                    normalize(p, v, digits, abs)
                }
            },
            PAdic::Approx {
                p: q,
                val,
                unit,
                prec,
            } => {
                let cur = val + *prec as i64;
                if abs >= cur {
                    self.clone()
                } else {
                    normalize(*q, *val, unit.clone(), abs)
                }
            }
            PAdic::Zero { p: q, abs: a } => PAdic::Zero {
                p: *q,
                abs: (*a).min(abs),
            },
        }
    }

    /// Round to `prec` relative digits (exact zero stays exact).
    pub fn round_rel(&self, p: u32, prec: u32) -> Self {
        match self.val(p) {
            Val::Inf => self.clone(),
            Val::Fin(v) => self.round_abs(p, v + prec as i64),
        }
    }

    /// Whether `self − other` is indistinguishable from zero.
    pub fn agrees_with(&self, other: &PAdic) -> bool {
        (self.clone() - other.clone()).is_zero_elem()
    }

    fn to_ap(&self, p: u32, abs_hint: i64) -> Option<Ap> {
        match self {
            PAdic::Exact(q) if q.is_zero() => None,
            PAdic::Exact(_) => Some(self.round_abs(p, abs_hint).to_ap(p, abs_hint).unwrap()),
            PAdic::Approx { val, unit, prec, .. } => Some(Ap {
                val: Some(*val),
                unit: unit.clone(),
                abs: val + *prec as i64,
            }),
            PAdic::Zero { abs, .. } => Some(Ap {
                val: None,
                unit: BigInt::zero(),
                abs: *abs,
            }),
        }
    }

    /// Residue of a p-adic unit modulo p, as an integer in [1, p).
    pub fn residue_digit(&self, p: u32) -> Result<u32> {
        if self.val(p) != Val::Fin(0) || self.is_zero_elem() {
            return Err(Error::InvalidArgument("residue of a non-unit".into()));
        }
        let r = match self {
            PAdic::Exact(q) => rational_mod_pk(q, p, 1).expect("unit"),
            PAdic::Approx { unit, .. } => unit % BigInt::from(p),
            PAdic::Zero { .. } => unreachable!(),
        };
        Ok(u32::try_from(r).expect("digit fits"))
    }

    /// The Teichmüller representative ω(u) of a unit, to `prec` digits.
    pub fn teichmuller(&self, p: u32, prec: u32) -> Result<Self> {
        let r = self.residue_digit(p)?;
        if r == 1 {
            return Ok(PAdic::int(1));
        }
        if r == p - 1 {
            return Ok(PAdic::int(-1));
        }
        let modulus = pk(p, prec as i64);
        let mut y = BigInt::from(r);
        for _ in 0..prec {
            y = y.modpow(&BigInt::from(p), &modulus);
        }
        Ok(PAdic::Approx {
            p,
            val: 0,
            unit: y,
            prec,
        })
    }

    /// The p-adic logarithm of a principal unit `u ≡ 1 mod p`, to `prec` relative digits.
    pub fn log1(&self, p: u32, prec: u32) -> Result<Self> {
        let y = self.clone() - PAdic::int(1);
        let vy = match y.val(p) {
            Val::Inf => return Ok(PAdic::int(0)),
            Val::Fin(v) => v,
        };
        if vy < 1 {
            return Err(Error::InvalidArgument(
                "logarithm needs a principal unit".into(),
            ));
        }
        let target = match y.abs_precision() {
            Val::Inf => vy + prec as i64,
            Val::Fin(a) => a.min(vy + prec as i64),
        };
        let mut acc = PAdic::int(0);
        let mut power = PAdic::int(1);
        let mut n: i64 = 1;
        loop {
            power = power * y.clone();
            let vn = split_p(&BigInt::from(n), p).0;
            if n * vy - vn >= target && n * vy - ilog(p, n) >= target {
                break;
            }
            let sign = if n % 2 == 1 { 1 } else { -1 };
            let term = power.clone() * PAdic::Exact(BigRational::new(sign.into(), n.into()));
            acc = acc + term;
            n += 1;
        }
        Ok(acc.round_abs(p, target))
    }

    /// The p-adic exponential of `y` with `v(y) ≥ 1`, to `prec` digits.
    pub fn exp(&self, p: u32, prec: u32) -> Result<Self> {
        let vy = match self.val(p) {
            Val::Inf => return Ok(PAdic::int(1)),
            Val::Fin(v) => v,
        };
        if vy < 1 {
            return Err(Error::NonConvergence(format!(
                "exponential needs valuation >= 1, got {vy}"
            )));
        }
        let target = match self.abs_precision() {
            Val::Inf => prec as i64,
            Val::Fin(a) => a.min(prec as i64),
        };
        let mut acc = PAdic::int(1);
        let mut term = PAdic::int(1);
        let mut n: i64 = 1;
        while (n * vy) * (p as i64 - 1) - (n - 1) < target * (p as i64 - 1) {
            term = term * self.clone() * PAdic::Exact(BigRational::new(1.into(), n.into()));
            acc = acc + term.clone();
            n += 1;
        }
        Ok(acc.round_abs(p, target))
    }
}

fn ilog(p: u32, n: i64) -> i64 {
    let mut k = 0;
    let mut m = 1i64;
    while m.saturating_mul(p as i64) <= n {
        m *= p as i64;
        k += 1;
    }
    k
}

fn add_ap(p: u32, a: Ap, b: Ap) -> PAdic {
    let abs = a.abs.min(b.abs);
    let terms: Vec<(i64, BigInt)> = [a, b]
        .into_iter()
        .filter_map(|x| x.val.filter(|v| *v < abs).map(|v| (v, x.unit)))
        .collect();
    let Some(m) = terms.iter().map(|t| t.0).min() else {
        return PAdic::Zero { p, abs };
    };
    let s: BigInt = terms
        .into_iter()
        .map(|(v, u)| u * pk(p, v - m))
        .sum();
    normalize(p, m, s, abs)
}

impl Add for PAdic {
    type Output = PAdic;
    fn add(self, rhs: PAdic) -> PAdic {
        match (&self, &rhs) {
            (PAdic::Exact(x), PAdic::Exact(y)) => PAdic::Exact(x + y),
            (PAdic::Exact(x), other) | (other, PAdic::Exact(x)) => {
                if x.is_zero() {
                    return other.clone();
                }
                let p = other.prime().expect("inexact operand has a prime");
                let abs = other.abs_precision().or_cap(i64::MAX);
                let a = PAdic::Exact(x.clone()).to_ap(p, abs).unwrap();
                add_ap(p, a, other.to_ap(p, abs).unwrap())
            }
            _ => {
                let p = self.prime().unwrap();
                assert_eq!(Some(p), rhs.prime(), "p-adic prime mismatch");
                add_ap(p, self.to_ap(p, 0).unwrap(), rhs.to_ap(p, 0).unwrap())
            }
        }
    }
}

impl Neg for PAdic {
    type Output = PAdic;
    fn neg(self) -> PAdic {
        match self {
            PAdic::Exact(q) => PAdic::Exact(-q),
            PAdic::Approx { p, val, unit, prec } => {
                let modulus = pk(p, prec as i64);
                PAdic::Approx {
                    p,
                    val,
                    unit: (&modulus - unit) % &modulus,
                    prec,
                }
            }
            z @ PAdic::Zero { .. } => z,
        }
    }
}

impl Sub for PAdic {
    type Output = PAdic;
    fn sub(self, rhs: PAdic) -> PAdic {
        self + (-rhs)
    }
}

impl Mul for PAdic {
    type Output = PAdic;
    fn mul(self, rhs: PAdic) -> PAdic {
        match (&self, &rhs) {
            (PAdic::Exact(x), PAdic::Exact(y)) => PAdic::Exact(x * y),
            (PAdic::Exact(x), other) | (other, PAdic::Exact(x)) => {
                if x.is_zero() {
                    return PAdic::Exact(BigRational::zero());
                }
                let p = other.prime().unwrap();
                let vx = rational_valuation(x, p).or_cap(0);
                match other {
                    PAdic::Zero { abs, .. } => PAdic::Zero { p, abs: abs + vx },
                    PAdic::Approx { prec, .. } => {
                        let xa = PAdic::Exact(x.clone()).round_rel(p, *prec);
                        xa * other.clone()
                    }
                    PAdic::Exact(_) => unreachable!(),
                }
            }
            (
                PAdic::Approx {
                    p,
                    val: v1,
                    unit: u1,
                    prec: q1,
                },
                PAdic::Approx {
                    val: v2,
                    unit: u2,
                    prec: q2,
                    ..
                },
            ) => {
                let prec = (*q1).min(*q2);
                PAdic::Approx {
                    p: *p,
                    val: v1 + v2,
                    unit: (u1 * u2) % pk(*p, prec as i64),
                    prec,
                }
            }
            (PAdic::Approx { p, val, .. }, PAdic::Zero { abs, .. })
            | (PAdic::Zero { abs, .. }, PAdic::Approx { p, val, .. }) => PAdic::Zero {
                p: *p,
                abs: abs + val,
            },
            (PAdic::Zero { p, abs: a }, PAdic::Zero { abs: b, .. }) => PAdic::Zero { p: *p, abs: a + b },
        }
    }
}

impl Zero for PAdic {
    fn zero() -> Self {
        PAdic::Exact(BigRational::zero())
    }
    fn is_zero(&self) -> bool {
        self.is_zero_elem()
    }
}

impl One for PAdic {
    fn one() -> Self {
        PAdic::int(1)
    }
}

impl Ring for PAdic {
    fn zero_like(&self) -> Self {
        PAdic::zero()
    }
    fn one_like(&self) -> Self {
        PAdic::one()
    }
    fn from_rational_like(&self, q: &BigRational) -> Self {
        PAdic::Exact(q.clone())
    }
    fn is_zero_elem(&self) -> bool {
        match self {
            PAdic::Exact(q) => q.is_zero(),
            PAdic::Approx { .. } => false,
            PAdic::Zero { .. } => true,
        }
    }
    fn try_inverse(&self) -> Result<Self> {
        match self {
            PAdic::Exact(q) if q.is_zero() => Err(Error::NonUnit {
                annihilator: "1".into(),
            }),
            PAdic::Exact(q) => Ok(PAdic::Exact(q.recip())),
            PAdic::Approx { p, val, unit, prec } => {
                let modulus = pk(*p, *prec as i64);
                Ok(PAdic::Approx {
                    p: *p,
                    val: -val,
                    unit: mod_inverse(unit, &modulus).expect("unit mantissa"),
                    prec: *prec,
                })
            }
            PAdic::Zero { abs, .. } => Err(Error::IndistinguishableFromZero(*abs)),
        }
    }
    fn valuation(&self, p: u32) -> Val {
        self.val(p)
    }
    fn is_unit(&self) -> bool {
        !self.is_zero_elem()
    }
}

impl Scalar for PAdic {
    fn from_rational(q: &BigRational) -> Self {
        PAdic::Exact(q.clone())
    }
    fn to_rational(&self) -> Option<BigRational> {
        self.exact_value().cloned()
    }
    fn from_padic(x: &PAdic) -> Option<Self> {
        Some(x.clone())
    }
    fn to_padic(&self, _p: u32, _prec: u32) -> PAdic {
        self.clone()
    }
    fn pivot_quality(&self, p: u32) -> PivotQuality {
        match self {
            PAdic::Exact(q) if q.is_zero() => PivotQuality::Zero,
            PAdic::Zero { .. } => PivotQuality::Zero,
            PAdic::Exact(q) => PivotQuality::Pivot {
                score: rational_valuation(q, p).or_cap(0),
                ambiguous: false,
            },
            PAdic::Approx { val, prec, .. } => PivotQuality::Pivot {
                score: *val,
                ambiguous: *prec <= PIVOT_GUARD,
            },
        }
    }
}

impl fmt::Display for PAdic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PAdic::Exact(q) => write!(f, "{q}"),
            PAdic::Approx { p, val, unit, prec } => {
                write!(f, "{p}^{val} * {unit} + O({p}^{})", val + *prec as i64)
            }
            PAdic::Zero { p, abs } => write!(f, "O({p}^{abs})"),
        }
    }
}

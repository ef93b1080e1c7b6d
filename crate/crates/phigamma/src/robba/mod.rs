//! Truncated Laurent series realizing windows of the Robba ring `R_A`.
//!
//! A [`RobbaElement`] stores the coefficients `a_n` of `Σ a_n Tⁿ` on a *known
//! range* inside a representable *cap*, together with two tail flags recording
//! whether the coefficients beyond the known range are unknown (truncated) or
//! exactly zero.  Every operation propagates knowledge honestly: a coefficient
//! of the result is reported only if every input coefficient it depends on is
//! known, and the tails are widened whenever truncation discards information.
//!
//! Operations whose exact value cannot be read off finitely many coefficients
//! (ψ and the restrictions `Res_{a+pⁿℤₚ}`) run through the exact model
//! [`CycloFrac`] and require tail-free inputs.  Elements of the subspace spanned
//! by `t^k (1+T)^a` live exactly in [`ExpPoly`].

mod cyclo;
mod exppoly;

pub use cyclo::CycloFrac;
pub use exppoly::ExpPoly;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use crate::coefficients::{binom_rational, Ring, Val};
use crate::error::{Error, Result};
use crate::poly::LaurentPoly;

/// Range of exponents `[lo, hi]` a series may occupy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    /// Lowest exponent.
    pub lo: i64,
    /// Highest exponent.
    pub hi: i64,
}

impl Window {
    /// A window with `lo ≤ 0 ≤ hi`.
    pub fn new(lo: i64, hi: i64) -> Result<Self> {
        if lo > 0 || hi < 0 {
            return Err(Error::InvalidArgument(format!(
                "window [{lo}, {hi}] must contain the exponent 0"
            )));
        }
        Ok(Window { lo, hi })
    }

    /// Whether `n` lies in the window.
    pub fn contains(&self, n: i64) -> bool {
        self.lo <= n && n <= self.hi
    }

    /// Intersection of two windows (both contain 0, so the result is non-empty).
    pub fn intersect(&self, other: &Window) -> Window {
        Window {
            lo: self.lo.max(other.lo),
            hi: self.hi.min(other.hi),
        }
    }

    /// Number of exponents in the window.
    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    /// Windows always contain the exponent 0.
    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Whether coefficients beyond the cap on one side are zero or possibly nonzero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Beyond {
    /// All coefficients beyond the cap vanish.
    Zero,
    /// Coefficients beyond the cap may be nonzero (or are unknown).
    Unknown,
}

impl Beyond {
    fn from_flag(unknown: bool) -> Self {
        if unknown {
            Beyond::Unknown
        } else {
            Beyond::Zero
        }
    }
}

/// A truncated Laurent series `Σ a_n Tⁿ` with honest truncation bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct RobbaElement<R> {
    p: u32,
    cap: Window,
    lo: i64,
    coeffs: Vec<R>,
    tail_low: bool,
    tail_high: bool,
    zero: R,
}

/// JSON view of a [`RobbaElement`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RobbaJson {
    /// Representable window.
    pub window: Window,
    /// Known range `[n_min, n_max]`.
    pub known: (i64, i64),
    /// Coefficients on the known range, rendered as strings.
    pub coeffs: Vec<String>,
    /// Unknown coefficients below the known range.
    pub tail_low: bool,
    /// Unknown coefficients above the known range.
    pub tail_high: bool,
}

/// A valuation `v^{[r,s]}` on the annulus `r ≤ v_p(T) ≤ s`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnulusValuation {
    /// Lower bound `r > 0`.
    pub r: BigRational,
    /// Upper bound `s ≥ r`.
    pub s: BigRational,
}

impl AnnulusValuation {
    /// The valuation attached to `[r, s]`.
    pub fn new(r: BigRational, s: BigRational) -> Result<Self> {
        if !r.is_positive() || s < r {
            return Err(Error::InvalidArgument(format!(
                "annulus needs 0 < r ≤ s, got r = {r}, s = {s}"
            )));
        }
        Ok(AnnulusValuation { r, s })
    }

    /// `r_n = 1/((p−1)p^{n−1})` for `n ≥ 1`.
    pub fn r_n(p: u32, n: u32) -> BigRational {
        assert!(n >= 1, "r_n is defined for n ≥ 1");
        let den = BigInt::from(p - 1) * BigInt::from(p).pow(n - 1);
        BigRational::new(BigInt::one(), den)
    }

    /// `min_k min(v(a_k) + r k, v(a_k) + s k)` over the coefficients of `f`.
    ///
    /// Returns `None` for the zero series.  Series with unknown tails are
    /// rejected, since the infimum would range over unknown coefficients.
    pub fn eval<R: Ring>(&self, f: &RobbaElement<R>) -> Result<Option<BigRational>> {
        if f.tail_low || f.tail_high {
            return Err(Error::WindowOverflow {
                op: "annulus valuation",
                detail: "the series has unknown tails".into(),
            });
        }
        let mut best: Option<BigRational> = None;
        for (n, c) in f.terms() {
            if let Val::Fin(v) = c.valuation(f.p) {
                let k = BigRational::from_integer(BigInt::from(n));
                let v = BigRational::from_integer(BigInt::from(v));
                let cand = (&v + &self.r * &k).min(&v + &self.s * &k);
                best = Some(match best {
                    None => cand,
                    Some(b) => b.min(cand),
                });
            }
        }
        Ok(best)
    }
}

impl<R: Ring> RobbaElement<R> {
    /// The zero series on a window.
    pub fn zero(p: u32, cap: Window, template: &R) -> Self {
        RobbaElement {
            p,
            cap,
            lo: 0,
            coeffs: vec![template.zero_like()],
            tail_low: false,
            tail_high: false,
            zero: template.zero_like(),
        }
    }

    /// A finite Laurent polynomial `Σ coeffs[i] T^{lo+i}` (no tails).
    pub fn from_coeffs(p: u32, cap: Window, lo: i64, coeffs: Vec<R>, template: &R) -> Result<Self> {
        let lp = LaurentPoly {
            offset: lo,
            poly: crate::poly::Poly::new(coeffs, template),
        }
        .normalized();
        Self::from_laurent(p, cap, &lp)
    }

    /// A finite Laurent polynomial in `T` (no tails).
    pub fn from_laurent(p: u32, cap: Window, f: &LaurentPoly<R>) -> Result<Self> {
        let zero = f.poly.zero_elem().clone();
        if let (Some(a), Some(b)) = (f.min_exp(), f.max_exp()) {
            if a < cap.lo || b > cap.hi {
                return Err(Error::WindowOverflow {
                    op: "from_laurent",
                    detail: format!("exponents [{a}, {b}] exceed the window [{}, {}]", cap.lo, cap.hi),
                });
            }
        }
        Self::from_fn(p, cap, |n| Some(f.coeff(n)), Beyond::Zero, Beyond::Zero, &zero)
    }

    /// The monomial `c Tⁿ`.
    pub fn monomial(p: u32, cap: Window, c: R, n: i64) -> Result<Self> {
        Self::from_laurent(p, cap, &LaurentPoly::monomial(c, n))
    }

    /// A power series `Σ_{n ≥ 0} c_n Tⁿ` given by its first coefficients, with
    /// the coefficients beyond `coeffs.len()` declared unknown.
    pub fn power_series_prefix(p: u32, cap: Window, coeffs: Vec<R>, template: &R) -> Result<Self> {
        let n = coeffs.len() as i64;
        Self::from_fn(
            p,
            cap,
            |k| {
                if k < 0 {
                    Some(template.zero_like())
                } else if k < n {
                    Some(coeffs[k as usize].clone())
                } else {
                    None
                }
            },
            Beyond::Zero,
            Beyond::Unknown,
            template,
        )
    }

    /// Build from a coefficient oracle on the cap.
    ///
    /// `known(n)` returns `None` for unknown coefficients.  The known range is
    /// the maximal block of known coefficients containing 0 (or, failing that,
    /// the longest block); everything outside it is recorded as a tail unless
    /// it is known to vanish.
    pub fn from_fn(
        p: u32,
        cap: Window,
        known: impl Fn(i64) -> Option<R>,
        below: Beyond,
        above: Beyond,
        template: &R,
    ) -> Result<Self> {
        let vals: Vec<Option<R>> = (cap.lo..=cap.hi).map(&known).collect();
        let idx0 = (-cap.lo) as usize;
        let (bl, bh) = if vals[idx0].is_some() {
            let mut l = idx0;
            while l > 0 && vals[l - 1].is_some() {
                l -= 1;
            }
            let mut h = idx0;
            while h + 1 < vals.len() && vals[h + 1].is_some() {
                h += 1;
            }
            (l, h)
        } else {
            let mut best: Option<(usize, usize)> = None;
            let mut i = 0;
            while i < vals.len() {
                if vals[i].is_some() {
                    let s = i;
                    while i + 1 < vals.len() && vals[i + 1].is_some() {
                        i += 1;
                    }
                    if best.map_or(true, |(a, b)| i - s > b - a) {
                        best = Some((s, i));
                    }
                }
                i += 1;
            }
            best.ok_or_else(|| Error::WindowOverflow {
                op: "assemble",
                detail: "no coefficient of the result is known on the window".into(),
            })?
        };
        let coeffs: Vec<R> = vals[bl..=bh].iter().map(|c| c.clone().expect("known")).collect();
        let unknown_below = vals[..bl].iter().any(|c| match c {
            None => true,
            Some(c) => !c.is_zero_elem(),
        });
        let unknown_above = vals[bh + 1..].iter().any(|c| match c {
            None => true,
            Some(c) => !c.is_zero_elem(),
        });
        Ok(RobbaElement {
            p,
            cap,
            lo: cap.lo + bl as i64,
            coeffs,
            tail_low: unknown_below || below == Beyond::Unknown,
            tail_high: unknown_above || above == Beyond::Unknown,
            zero: template.zero_like(),
        })
    }

    /// The prime.
    pub fn p(&self) -> u32 {
        self.p
    }

    /// The representable window.
    pub fn cap(&self) -> Window {
        self.cap
    }

    /// The known range `[n_min, n_max]`.
    pub fn known_range(&self) -> (i64, i64) {
        (self.lo, self.lo + self.coeffs.len() as i64 - 1)
    }

    /// Whether coefficients below the known range are unknown.
    pub fn tail_low(&self) -> bool {
        self.tail_low
    }

    /// Whether coefficients above the known range are unknown.
    pub fn tail_high(&self) -> bool {
        self.tail_high
    }

    /// Whether no coefficient is unknown.
    pub fn is_exact(&self) -> bool {
        !self.tail_low && !self.tail_high
    }

    /// A zero coefficient of the right ring.
    pub fn zero_coeff(&self) -> &R {
        &self.zero
    }

    /// Coefficient of `Tⁿ` when known.
    pub fn coeff(&self, n: i64) -> Option<R> {
        let (l, h) = self.known_range();
        if n < l {
            (!self.tail_low).then(|| self.zero.clone())
        } else if n > h {
            (!self.tail_high).then(|| self.zero.clone())
        } else {
            Some(self.coeffs[(n - l) as usize].clone())
        }
    }

    /// Coefficient of `Tⁿ`, or a window-overflow error naming `op`.
    pub fn coeff_checked(&self, n: i64, op: &'static str) -> Result<R> {
        self.coeff(n).ok_or_else(|| Error::WindowOverflow {
            op,
            detail: format!("coefficient of T^{n} is outside the known range {:?}", self.known_range()),
        })
    }

    /// Known nonzero terms `(n, a_n)`.
    pub fn terms(&self) -> impl Iterator<Item = (i64, &R)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero_elem())
            .map(move |(i, c)| (self.lo + i as i64, c))
    }

    /// Lowest exponent that may carry a nonzero coefficient (`None` = −∞).
    fn support_lo(&self) -> Option<i64> {
        if self.tail_low {
            return None;
        }
        Some(self.terms().next().map_or(i64::MAX / 4, |(n, _)| n))
    }

    /// Highest exponent that may carry a nonzero coefficient (`None` = +∞).
    fn support_hi(&self) -> Option<i64> {
        if self.tail_high {
            return None;
        }
        Some(self.terms().last().map_or(i64::MIN / 4, |(n, _)| n))
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.p != other.p {
            return Err(Error::RingMismatch(format!(
                "series over p = {} and p = {}",
                self.p, other.p
            )));
        }
        Ok(())
    }

    /// Sum (coefficient-wise; known iff both summands are known).
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let cap = self.cap.intersect(&other.cap);
        let lower_out = self.tail_low || other.tail_low || self.below_cap_nonzero(cap) || other.below_cap_nonzero(cap);
        let upper_out = self.tail_high || other.tail_high || self.above_cap_nonzero(cap) || other.above_cap_nonzero(cap);
        Self::from_fn(
            self.p,
            cap,
            |n| Some(self.coeff(n)? + other.coeff(n)?),
            Beyond::from_flag(lower_out),
            Beyond::from_flag(upper_out),
            &self.zero,
        )
    }

    fn below_cap_nonzero(&self, cap: Window) -> bool {
        self.terms().any(|(n, _)| n < cap.lo)
    }

    fn above_cap_nonzero(&self, cap: Window) -> bool {
        self.terms().any(|(n, _)| n > cap.hi)
    }

    /// Negation.
    pub fn neg(&self) -> Self {
        RobbaElement {
            coeffs: self.coeffs.iter().map(|c| -c.clone()).collect(),
            ..self.clone()
        }
    }

    /// Difference.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    /// Multiplication by a constant of `A`.
    pub fn scale(&self, s: &R) -> Self {
        RobbaElement {
            coeffs: self.coeffs.iter().map(|c| c.clone() * s.clone()).collect(),
            ..self.clone()
        }
    }

    /// Cauchy product truncated to the common window.
    ///
    /// The coefficient of `Tⁿ` is known iff the set of index pairs that can
    /// contribute is finite and every coefficient involved is known.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let cap = self.cap.intersect(&other.cap);
        let (alo, ahi, blo, bhi) = (self.support_lo(), self.support_hi(), other.support_lo(), other.support_hi());
        let coefficient = |n: i64| -> Option<R> {
            // k ranges over the exponents of `self`.
            let k_lo = match (alo, bhi) {
                (Some(a), Some(b)) => Some(a.max(n - b)),
                (Some(a), None) => Some(a),
                (None, Some(b)) => Some(n - b),
                (None, None) => None,
            };
            let k_hi = match (ahi, blo) {
                (Some(a), Some(b)) => Some(a.min(n - b)),
                (Some(a), None) => Some(a),
                (None, Some(b)) => Some(n - b),
                (None, None) => None,
            };
            let (k_lo, k_hi) = (k_lo?, k_hi?);
            let mut acc = self.zero.clone();
            for k in k_lo..=k_hi {
                acc = acc + self.coeff(k)? * other.coeff(n - k)?;
            }
            Some(acc)
        };
        let below = match (alo, blo) {
            (Some(a), Some(b)) => a + b < cap.lo,
            _ => true,
        };
        let above = match (ahi, bhi) {
            (Some(a), Some(b)) => a + b > cap.hi,
            _ => true,
        };
        Self::from_fn(self.p, cap, coefficient, Beyond::from_flag(below), Beyond::from_flag(above), &self.zero)
    }

    /// Split `f = f⁺ + f⁻` with `f⁺ = Σ_{n≥0} a_n Tⁿ` and `f⁻ = Σ_{n<0} a_n Tⁿ`.
    pub fn split(&self) -> (Self, Self) {
        let plus = RobbaElement::from_fn(
            self.p,
            self.cap,
            |n| if n < 0 { Some(self.zero.clone()) } else { self.coeff(n) },
            Beyond::Zero,
            Beyond::from_flag(self.tail_high),
            &self.zero,
        )
        .unwrap_or_else(|_| RobbaElement::zero(self.p, self.cap, &self.zero));
        let minus = RobbaElement::from_fn(
            self.p,
            self.cap,
            |n| if n >= 0 { Some(self.zero.clone()) } else { self.coeff(n) },
            Beyond::from_flag(self.tail_low),
            Beyond::Zero,
            &self.zero,
        )
        .unwrap_or_else(|_| RobbaElement::zero(self.p, self.cap, &self.zero));
        (plus, minus)
    }

    /// Whether the series lies in `R⁺` (no possibly-nonzero negative coefficient).
    pub fn is_plus(&self) -> bool {
        !self.tail_low && self.terms().all(|(n, _)| n >= 0)
    }

    /// The exact Laurent polynomial (requires both tails to be clear).
    pub fn to_laurent(&self, op: &'static str) -> Result<LaurentPoly<R>> {
        if !self.is_exact() {
            return Err(Error::WindowOverflow {
                op,
                detail: "the operation needs every coefficient, but the series has unknown tails".into(),
            });
        }
        let mut acc = LaurentPoly::zero(&self.zero);
        for (n, c) in self.terms() {
            acc = acc.add(&LaurentPoly::monomial(c.clone(), n));
        }
        Ok(acc)
    }

    /// `res₀(f dT) = a_{−1}`.
    pub fn res0(&self) -> Result<R> {
        self.coeff_checked(-1, "res0")
    }

    /// `∂ = (1+T) d/dT`; the coefficient of `T^m` is `(m+1)a_{m+1} + m a_m`.
    pub fn partial(&self) -> Result<Self> {
        let coefficient = |m: i64| -> Option<R> {
            let first = if m + 1 == 0 { self.zero.clone() } else { self.coeff(m + 1)?.mul_int(m + 1) };
            let second = if m == 0 { self.zero.clone() } else { self.coeff(m)?.mul_int(m) };
            Some(first + second)
        };
        Self::from_fn(
            self.p,
            self.cap,
            coefficient,
            Beyond::from_flag(self.tail_low || self.terms().any(|(n, _)| n <= self.cap.lo && n != 0)),
            Beyond::from_flag(self.tail_high),
            &self.zero,
        )
    }

    /// `t = log(1+T)`, truncated to the window (unknown above it).
    pub fn log_one_plus_t(p: u32, cap: Window, template: &R) -> Result<Self> {
        let coeffs: Vec<R> = (0..=cap.hi)
            .map(|n| {
                if n == 0 {
                    template.zero_like()
                } else {
                    let sign = if n % 2 == 1 { 1 } else { -1 };
                    template.from_rational_like(&BigRational::new(BigInt::from(sign), BigInt::from(n)))
                }
            })
            .collect();
        Self::power_series_prefix(p, cap, coeffs, template)
    }

    /// `∇ = t ∂` with `t` truncated at the window.
    pub fn nabla(&self) -> Result<Self> {
        let t = Self::log_one_plus_t(self.p, self.cap, &self.zero)?;
        t.mul(&self.partial()?)
    }

    /// `(1+T)^a = Σ binom(a, n) Tⁿ` for `a ∈ ℤ_(p)`, truncated at the window.
    pub fn one_plus_t_pow(p: u32, cap: Window, a: &BigRational, template: &R) -> Result<Self> {
        let finite = a.is_integer() && !a.is_negative();
        let top = if finite {
            a.to_integer().try_into().unwrap_or(i64::MAX).min(cap.hi)
        } else {
            cap.hi
        };
        let coeffs: Vec<R> = (0..=top)
            .map(|n| template.from_rational_like(&binom_rational(a, n as usize)))
            .collect();
        let exact_poly = finite && BigInt::from(cap.hi) >= a.to_integer();
        if exact_poly {
            Self::from_coeffs(p, cap, 0, coeffs, template)
        } else {
            Self::power_series_prefix(p, cap, coeffs, template)
        }
    }

    /// Frobenius `φ: T ↦ (1+T)^p − 1`.
    pub fn phi(&self) -> Result<Self> {
        let sub = binomial_minus_one_rational(
            &BigRational::from_integer(BigInt::from(self.p)),
            self.cap.hi as usize + 1,
            &self.zero,
        );
        let (plus, minus) = self.split();
        let plus_img = self.substitute_plus(&plus, &sub, Some(self.p as usize))?;
        let minus_img = self.phi_minus(&minus)?;
        plus_img.add(&minus_img)
    }

    /// Apply `T ↦ S(T)` (with `S(0) = 0`, `sub` holding the first `cap.hi + 1`
    /// coefficients of `S`, and `sub_degree` its degree or `None` for an
    /// infinite series) to the power series `plus`, truncated at the cap.
    fn substitute_plus(&self, plus: &Self, sub: &[R], sub_degree: Option<usize>) -> Result<Self> {
        let cap = self.cap;
        let hi = cap.hi as usize;
        // Since S(0) = 0, the coefficient of Tⁿ only involves a_0, …, a_n.
        let known_hi = if plus.tail_high { plus.known_range().1.max(-1) } else { cap.hi };
        let top = plus.terms().last().map_or(0, |(n, _)| n).max(0) as usize;
        let mut acc: Vec<R> = vec![self.zero.clone(); hi + 1];
        for d in (0..=top).rev() {
            let c = plus.coeff(d as i64).unwrap_or_else(|| self.zero.clone());
            acc = ps_mul(&acc, sub, hi + 1, &self.zero);
            acc[0] = acc[0].clone() + c;
        }
        let overflow = plus.tail_high
            || (top > 0
                && match sub_degree {
                    None => true,
                    Some(d) => top * d > hi,
                });
        Self::from_fn(
            self.p,
            cap,
            |n| {
                if n < 0 {
                    Some(self.zero.clone())
                } else if n <= known_hi {
                    Some(acc[n as usize].clone())
                } else {
                    None
                }
            },
            Beyond::Zero,
            Beyond::from_flag(overflow),
            &self.zero,
        )
    }

    fn phi_minus(&self, minus: &Self) -> Result<Self> {
        let p = self.p as i64;
        let depth = (-self.cap.lo) as usize; // degree in s = T⁻¹ to compute
        let kmax = minus.terms().next().map_or(0, |(n, _)| -n).max(0) as usize;
        if kmax == 0 && !minus.tail_low {
            return Ok(RobbaElement::zero(self.p, self.cap, &self.zero));
        }
        // W(s) = (1 + Σ_{m=1}^{p−1} binom(p, m) s^m)^{−1}.
        let mut u = vec![self.zero.clone(); depth + 1];
        u[0] = self.zero.one_like();
        for m in 1..(p as usize) {
            if m <= depth {
                u[m] = self.zero.from_rational_like(&binom_rational(&BigRational::from_integer(BigInt::from(p)), m));
            }
        }
        let w = ps_inv(&u, depth + 1, &self.zero)?;
        let mut acc = vec![self.zero.clone(); depth + 1];
        let mut wk = vec![self.zero.clone(); depth + 1];
        wk[0] = self.zero.one_like();
        for k in 1..=kmax {
            wk = ps_mul(&wk, &w, depth + 1, &self.zero);
            let c = minus.coeff(-(k as i64)).unwrap_or_else(|| self.zero.clone());
            let shift = (p as usize) * k;
            if shift > depth || c.is_zero_elem() {
                continue;
            }
            for j in 0..=(depth - shift) {
                acc[shift + j] = acc[shift + j].clone() + c.clone() * wk[j].clone();
            }
        }
        // With an unknown lower tail in the input, s^m is known only for m < p(K+1).
        let known_depth = if minus.tail_low {
            let (l, _) = minus.known_range();
            let k_known = (-l).max(0);
            (p * (k_known + 1) - 1) as usize
        } else {
            depth
        };
        Self::from_fn(
            self.p,
            self.cap,
            |n| {
                if n >= 0 {
                    Some(self.zero.clone())
                } else if ((-n) as usize) <= known_depth.min(depth) {
                    Some(acc[(-n) as usize].clone())
                } else {
                    None
                }
            },
            Beyond::Unknown,
            Beyond::Zero,
            &self.zero,
        )
    }

    /// `σ_a: T ↦ (1+T)^a − 1` for a unit `a ∈ ℤ_(p)^×`.
    pub fn sigma(&self, a: &BigRational) -> Result<Self> {
        if crate::coefficients::rational_valuation(a, self.p) != Val::Fin(0) {
            return Err(Error::InvalidArgument(format!("σ_a needs a p-adic unit, got {a}")));
        }
        let hi = self.cap.hi as usize;
        let (plus, minus) = self.split();
        if minus.tail_low {
            return Err(Error::WindowOverflow {
                op: "sigma",
                detail: "an unknown tail of negative powers feeds every coefficient".into(),
            });
        }
        let kmax = minus.terms().next().map_or(0, |(n, _)| -n).max(0) as usize;
        let len = hi + kmax + 1;
        let sub = binomial_minus_one_rational(a, len + 1, &self.zero);
        let degree = if a.is_integer() && a.is_positive() {
            a.to_integer().try_into().ok()
        } else {
            None
        };
        let plus_img = self.substitute_plus(&plus, &sub[..hi + 1], degree)?;
        if kmax == 0 {
            return Ok(plus_img);
        }
        // σ_a(T)^{-1} = T^{-1} V(T), V = (σ_a(T)/T)^{-1}.
        let quotient: Vec<R> = sub[1..].to_vec();
        let v = ps_inv(&quotient, len, &self.zero)?;
        let mut acc = vec![self.zero.clone(); len + kmax];
        let mut vk = vec![self.zero.clone(); len];
        vk[0] = self.zero.one_like();
        for k in 1..=kmax {
            vk = ps_mul(&vk, &v, len, &self.zero);
            let c = minus.coeff(-(k as i64)).unwrap_or_else(|| self.zero.clone());
            if c.is_zero_elem() {
                continue;
            }
            // c T^{-k} V^k contributes to exponents -k + j.
            for j in 0..len {
                let e = j as i64 - k as i64 + kmax as i64;
                if e >= 0 && (e as usize) < acc.len() {
                    acc[e as usize] = acc[e as usize].clone() + c.clone() * vk[j].clone();
                }
            }
        }
        let minus_img = Self::from_fn(
            self.p,
            self.cap,
            |n| {
                let e = n + kmax as i64;
                if e < 0 {
                    Some(self.zero.clone())
                } else {
                    Some(acc[e as usize].clone())
                }
            },
            Beyond::Zero,
            Beyond::Unknown,
            &self.zero,
        )?;
        plus_img.add(&minus_img)
    }

    /// ψ, computed exactly through [`CycloFrac`]; needs a tail-free input.
    pub fn psi(&self) -> Result<Self> {
        let f = CycloFrac::from_laurent_t(self.p, &self.to_laurent("psi")?);
        f.psi().to_window(self.cap)
    }

    /// `Res_{a+pⁿℤₚ} = (1+T)^a φⁿ ψⁿ (1+T)^{−a}` (exact; needs a tail-free input).
    pub fn restrict(&self, a: i64, n: u32) -> Result<Self> {
        let f = CycloFrac::from_laurent_t(self.p, &self.to_laurent("restrict")?);
        f.restrict(a, n)?.to_window(self.cap)
    }

    /// Defect `v(f − g) − v(f)` on the common known range (relative valuation).
    ///
    /// Returns `Val::Inf` when the two agree exactly there.
    pub fn defect(&self, other: &Self) -> Val {
        let (l1, h1) = self.known_range();
        let (l2, h2) = other.known_range();
        let (lo, hi) = (l1.max(l2), h1.min(h2));
        let mut diff = Val::Inf;
        let mut size = Val::Inf;
        for n in lo..=hi {
            let (a, b) = match (self.coeff(n), other.coeff(n)) {
                (Some(a), Some(b)) => (a, b),
                _ => continue,
            };
            diff = diff.min((a.clone() - b.clone()).valuation(self.p));
            size = size.min(a.valuation(self.p)).min(b.valuation(self.p));
        }
        match (diff, size) {
            (Val::Inf, _) => Val::Inf,
            (Val::Fin(d), Val::Fin(s)) => Val::Fin(d - s),
            (Val::Fin(d), Val::Inf) => Val::Fin(d),
        }
    }

    /// Minimum coefficient valuation over the known range.
    pub fn min_valuation(&self) -> Val {
        self.coeffs.iter().fold(Val::Inf, |acc, c| acc.min(c.valuation(self.p)))
    }

    /// JSON view with coefficients rendered by `render`.
    pub fn to_json(&self, render: impl Fn(&R) -> String) -> RobbaJson {
        RobbaJson {
            window: self.cap,
            known: self.known_range(),
            coeffs: self.coeffs.iter().map(render).collect(),
            tail_low: self.tail_low,
            tail_high: self.tail_high,
        }
    }
}

/// Coefficients of `(1+T)^a − 1`, `len` terms.
fn binomial_minus_one_rational<R: Ring>(a: &BigRational, len: usize, template: &R) -> Vec<R> {
    (0..len)
        .map(|n| {
            if n == 0 {
                template.zero_like()
            } else {
                template.from_rational_like(&binom_rational(a, n))
            }
        })
        .collect()
}

/// Truncated product of power series (first `len` coefficients).
pub(crate) fn ps_mul<R: Ring>(a: &[R], b: &[R], len: usize, zero: &R) -> Vec<R> {
    let mut out = vec![zero.clone(); len];
    for (i, x) in a.iter().enumerate().take(len) {
        if x.is_zero_elem() {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(len - i) {
            out[i + j] = out[i + j].clone() + x.clone() * y.clone();
        }
    }
    out
}

/// Truncated inverse of a power series with unit constant term.
pub(crate) fn ps_inv<R: Ring>(a: &[R], len: usize, zero: &R) -> Result<Vec<R>> {
    let c0 = a.first().cloned().unwrap_or_else(|| zero.clone()).try_inverse()?;
    let mut out = vec![zero.clone(); len];
    out[0] = c0.clone();
    for n in 1..len {
        let mut acc = zero.clone();
        for k in 1..=n.min(a.len().saturating_sub(1)) {
            acc = acc + a[k].clone() * out[n - k].clone();
        }
        out[n] = -(acc * c0.clone());
    }
    Ok(out)
}


//! Exact finite sums `Σ c · t^k (1+T)^a` with `a ∈ ℤ_(p)` and `t = log(1+T)`.
//!
//! These are the Amice transforms of finite combinations of derivatives of
//! Dirac distributions at rational points of ℤₚ: `∫ g · d(t^k(1+T)^a) = g^{(k)}(a)`.
//! The space is stable under φ, ψ, `σ_b`, `∂`, `∇`, multiplication by
//! `(1+T)^b`, the restrictions to residue classes, the involution `w_*` and
//! the twists `m_δ`, so identities among those operators can be checked exactly.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::{ps_mul, Beyond, RobbaElement, Window};
use crate::coefficients::{binom_rational, rational_mod_pk, rational_valuation, Ring, Val};
use crate::error::{Error, Result};
use crate::poly::binomial_poly;

/// A finite sum `Σ c_{a,k} t^k (1+T)^a`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpPoly<R> {
    p: u32,
    terms: BTreeMap<(BigRational, u32), R>,
    zero: R,
}

fn q_int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn q_pow(a: &BigRational, k: i64) -> BigRational {
    if k >= 0 {
        num_traits::pow(a.clone(), k as usize)
    } else {
        num_traits::pow(a.recip(), (-k) as usize)
    }
}

/// Unsigned Lah number `L(k, j) = binom(k−1, j−1) k!/j!`.
pub fn lah(k: u32, j: u32) -> BigRational {
    if j == 0 || j > k {
        return if j == 0 && k == 0 { BigRational::one() } else { BigRational::zero() };
    }
    let mut fk = BigInt::one();
    for i in 1..=k {
        fk *= BigInt::from(i);
    }
    let mut fj = BigInt::one();
    for i in 1..=j {
        fj *= BigInt::from(i);
    }
    binom_rational(&q_int(k as i64 - 1), (j - 1) as usize) * BigRational::new(fk, fj)
}

impl<R: Ring> ExpPoly<R> {
    /// The zero element.
    pub fn zero(p: u32, template: &R) -> Self {
        ExpPoly {
            p,
            terms: BTreeMap::new(),
            zero: template.zero_like(),
        }
    }

    /// The monomial `c t^k (1+T)^a`; `a` must lie in `ℤ_(p)`.
    pub fn monomial(p: u32, c: R, k: u32, a: BigRational) -> Result<Self> {
        if rational_valuation(&a, p) < Val::Fin(0) {
            return Err(Error::InvalidArgument(format!("exponent {a} is not a p-adic integer")));
        }
        let zero = c.zero_like();
        let mut out = ExpPoly::zero(p, &zero);
        out.insert(a, k, c);
        Ok(out)
    }

    /// The Amice transform `(1+T)^a` of the Dirac mass at `a`.
    pub fn dirac(p: u32, a: BigRational, template: &R) -> Result<Self> {
        Self::monomial(p, template.one_like(), 0, a)
    }

    fn insert(&mut self, a: BigRational, k: u32, c: R) {
        let key = (a, k);
        let new = match self.terms.remove(&key) {
            Some(old) => old + c,
            None => c,
        };
        if !new.is_zero_elem() {
            self.terms.insert(key, new);
        }
    }

    /// The prime.
    pub fn p(&self) -> u32 {
        self.p
    }

    /// A zero coefficient.
    pub fn zero_coeff(&self) -> &R {
        &self.zero
    }

    /// Nonzero terms `((a, k), c)`.
    pub fn terms(&self) -> impl Iterator<Item = (&(BigRational, u32), &R)> {
        self.terms.iter()
    }

    /// Whether zero.
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Apply a term-wise transformation `(a, k, c) ↦ Σ (a′, k′, c′)`.
    fn map_terms(&self, f: impl Fn(&BigRational, u32, &R) -> Vec<(BigRational, u32, R)>) -> Self {
        let mut out = ExpPoly::zero(self.p, &self.zero);
        for ((a, k), c) in &self.terms {
            for (a2, k2, c2) in f(a, *k, c) {
                out.insert(a2, k2, c2);
            }
        }
        out
    }

    /// Sum.
    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for ((a, k), c) in &other.terms {
            out.insert(a.clone(), *k, c.clone());
        }
        out
    }

    /// Negation.
    pub fn neg(&self) -> Self {
        self.map_terms(|a, k, c| vec![(a.clone(), k, -c.clone())])
    }

    /// Difference.
    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    /// Multiplication by a constant.
    pub fn scale(&self, s: &R) -> Self {
        self.map_terms(|a, k, c| vec![(a.clone(), k, c.clone() * s.clone())])
    }

    /// Product.
    pub fn mul(&self, other: &Self) -> Self {
        let mut out = ExpPoly::zero(self.p, &self.zero);
        for ((a, k), c) in &self.terms {
            for ((b, l), d) in &other.terms {
                out.insert(a + b, k + l, c.clone() * d.clone());
            }
        }
        out
    }

    /// Multiplication by `(1+T)^b`.
    pub fn mul_x_power(&self, b: &BigRational) -> Self {
        self.map_terms(|a, k, c| vec![(a + b, k, c.clone())])
    }

    /// φ: `t^k X^a ↦ p^k t^k X^{pa}`.
    pub fn phi(&self) -> Self {
        let p = q_int(self.p as i64);
        self.map_terms(|a, k, c| {
            let f = c.from_rational_like(&q_pow(&p, k as i64));
            vec![(a * &p, k, c.clone() * f)]
        })
    }

    /// ψ: keeps the terms with `p | a`, mapping `t^k X^a ↦ p^{−k} t^k X^{a/p}`.
    pub fn psi(&self) -> Self {
        let p = q_int(self.p as i64);
        let prime = self.p;
        self.map_terms(|a, k, c| {
            if a.is_zero() || rational_valuation(a, prime) >= Val::Fin(1) {
                let f = c.from_rational_like(&q_pow(&p, -(k as i64)));
                vec![(a / &p, k, c.clone() * f)]
            } else {
                vec![]
            }
        })
    }

    /// `σ_b`: `t^k X^a ↦ b^k t^k X^{ab}` for a unit `b ∈ ℤ_(p)^×`.
    pub fn sigma(&self, b: &BigRational) -> Result<Self> {
        if rational_valuation(b, self.p) != Val::Fin(0) {
            return Err(Error::InvalidArgument(format!("σ_b needs a p-adic unit, got {b}")));
        }
        Ok(self.map_terms(|a, k, c| {
            let f = c.from_rational_like(&q_pow(b, k as i64));
            vec![(a * b, k, c.clone() * f)]
        }))
    }

    /// `∂`: `t^k X^a ↦ k t^{k−1} X^a + a t^k X^a`.
    pub fn partial(&self) -> Self {
        self.map_terms(|a, k, c| {
            let mut v = vec![(a.clone(), k, c.clone() * c.from_rational_like(a))];
            if k > 0 {
                v.push((a.clone(), k - 1, c.mul_int(k as i64)));
            }
            v
        })
    }

    /// `∇ = t∂`: `t^k X^a ↦ k t^k X^a + a t^{k+1} X^a`.
    pub fn nabla(&self) -> Self {
        self.map_terms(|a, k, c| {
            vec![
                (a.clone(), k, c.mul_int(k as i64)),
                (a.clone(), k + 1, c.clone() * c.from_rational_like(a)),
            ]
        })
    }

    /// `Res_{b+pⁿℤₚ}`: keeps the terms whose exponent lies in `b + pⁿℤₚ`.
    pub fn restrict(&self, b: i64, n: u32) -> Self {
        let modulus = BigInt::from(self.p).pow(n);
        let target = BigInt::from(b).modpow(&BigInt::one(), &modulus);
        let prime = self.p;
        self.map_terms(|a, k, c| {
            let r = rational_mod_pk(a, prime, n).expect("exponents are p-adic integers");
            if r == target {
                vec![(a.clone(), k, c.clone())]
            } else {
                vec![]
            }
        })
    }

    /// `Res_{ℤₚ^×}`.
    pub fn restrict_units(&self) -> Self {
        let prime = self.p;
        self.map_terms(|a, k, c| {
            if !a.is_zero() && rational_valuation(a, prime) == Val::Fin(0) {
                vec![(a.clone(), k, c.clone())]
            } else {
                vec![]
            }
        })
    }

    /// `Res_{pℤₚ}`.
    pub fn restrict_pzp(&self) -> Self {
        self.sub(&self.restrict_units())
    }

    /// Whether every exponent is a p-adic unit (the element is supported on ℤₚ^×).
    pub fn supported_on_units(&self) -> bool {
        self.terms
            .keys()
            .all(|(a, _)| !a.is_zero() && rational_valuation(a, self.p) == Val::Fin(0))
    }

    /// The involution `w_*` on `R⁺ ⊠ ℤₚ^×`, dual to `φ(x) ↦ φ(1/x)`:
    /// `t^k X^a ↦ Σ_{j=1}^{k} (−1)^k L(k,j) a^{−k−j} t^j X^{1/a}` (`X^a ↦ X^{1/a}` for `k = 0`).
    pub fn w_star(&self) -> Result<Self> {
        if !self.supported_on_units() {
            return Err(Error::InvalidArgument(
                "w_* is defined on elements supported on the units".into(),
            ));
        }
        Ok(self.map_terms(|a, k, c| {
            let inv = a.recip();
            if k == 0 {
                return vec![(inv, 0, c.clone())];
            }
            let sign = if k % 2 == 0 { 1 } else { -1 };
            (1..=k)
                .map(|j| {
                    let coef = lah(k, j) * q_pow(a, -((k + j) as i64)) * q_int(sign);
                    (inv.clone(), j, c.clone() * c.from_rational_like(&coef))
                })
                .collect()
        }))
    }

    /// Integrate against a function given by its Taylor jets:
    /// `∫ g · d(t^k X^a) = g^{(k)}(a)`, where `jet(a, k)` returns `g^{(k)}(a)`.
    pub fn integrate(&self, jet: impl Fn(&BigRational, u32) -> Result<R>) -> Result<R> {
        let mut acc = self.zero.clone();
        for ((a, k), c) in &self.terms {
            acc = acc + c.clone() * jet(a, *k)?;
        }
        Ok(acc)
    }

    /// Binomial moments `m_n = ∫ binom(x, n)` for `0 ≤ n ≤ n_max`.
    pub fn moments(&self, n_max: usize) -> Vec<R> {
        (0..=n_max)
            .map(|n| {
                let b = binomial_poly(n, &self.zero);
                let mut acc = self.zero.clone();
                for ((a, k), c) in &self.terms {
                    let mut d = b.clone();
                    for _ in 0..*k {
                        d = d.derivative();
                    }
                    acc = acc + c.clone() * d.eval(&self.zero.from_rational_like(a));
                }
                acc
            })
            .collect()
    }

    /// Minimum coefficient valuation.
    pub fn min_valuation(&self) -> Val {
        self.terms.values().fold(Val::Inf, |acc, c| acc.min(c.valuation(self.p)))
    }

    /// Relative defect `v(f − g) − min(v(f), v(g))` (`Inf` on exact agreement).
    pub fn defect(&self, other: &Self) -> Val {
        let d = self.sub(other).min_valuation();
        let s = self.min_valuation().min(other.min_valuation());
        match (d, s) {
            (Val::Inf, _) => Val::Inf,
            (Val::Fin(d), Val::Fin(s)) => Val::Fin(d - s),
            (Val::Fin(d), Val::Inf) => Val::Fin(d),
        }
    }

    /// Expand into a window as a power series in `T` (unknown above the cap
    /// whenever the expansion is infinite or longer than the cap).
    pub fn to_window(&self, cap: Window) -> Result<RobbaElement<R>> {
        let hi = cap.hi as usize;
        let z = &self.zero;
        let t_series: Vec<R> = (0..=hi)
            .map(|n| {
                if n == 0 {
                    z.clone()
                } else {
                    let s = if n % 2 == 1 { 1 } else { -1 };
                    z.from_rational_like(&BigRational::new(BigInt::from(s), BigInt::from(n as i64)))
                }
            })
            .collect();
        let mut acc = vec![z.clone(); hi + 1];
        let mut unknown = false;
        for ((a, k), c) in &self.terms {
            let finite = a.is_integer() && !a.is_negative() && a.to_integer() <= BigInt::from(hi);
            if *k > 0 || !finite {
                unknown = true;
            }
            let mut series: Vec<R> = (0..=hi).map(|n| z.from_rational_like(&binom_rational(a, n))).collect();
            for _ in 0..*k {
                series = ps_mul(&series, &t_series, hi + 1, z);
            }
            for (slot, s) in acc.iter_mut().zip(series) {
                *slot = slot.clone() + c.clone() * s;
            }
        }
        RobbaElement::from_fn(
            self.p,
            cap,
            |n| if n < 0 { Some(z.clone()) } else { Some(acc[n as usize].clone()) },
            Beyond::Zero,
            Beyond::from_flag(unknown),
            z,
        )
    }
}

//! The twists `m_δ` on `R^{ψ=0} = R ⊠ ℤₚ^×`, the involution `w_*` and `ι_{δ₁,δ₂}`.
//!
//! Elements of `R^{ψ=0}` are modelled exactly by [`ExpPoly`] sums supported on
//! ℤₚ^× (every exponent a p-adic unit), i.e. Amice transforms of finite
//! combinations of derivatives of Dirac masses at units.  On this model:
//!
//! * `m_δ` is computed by the convergent series
//!   `m_δ(f) = Σ_i Σ_j binom(κ, j) δ(i) i^{−j} (1+T)^i p^{Nj} φ^N(∂^j f_i)`
//!   over `f = Σ_{i ∈ (ℤ/p^N)^×} (1+T)^i φ^N(f_i)`, truncated once the
//!   remaining terms are below the working precision; a closed form
//!   (multiplication of the distribution by `δ`) serves as an independent oracle.
//! * `w_*` is the pushforward along `x ↦ 1/x`.
//! * `ι_{δ₁,δ₂} = δ₁(−1) · w_* ∘ m_{δ⁻¹}` with `δ = δ₁δ₂⁻¹χ⁻¹`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::characters::{integer_value, round_element, Character};
use crate::coefficients::{rational_mod_pk, CoeffElement, Ring, Scalar, Val};
use crate::error::{Error, Result};
use crate::robba::{ExpPoly, RobbaElement, Window};

/// An element of `R^{ψ=0}` with the level of its decomposition and the
/// absolute p-adic accuracy to which its coefficients are certified.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiZeroElement<R> {
    f: ExpPoly<R>,
    level: u32,
    accuracy: Val,
}

impl<R: Ring> PsiZeroElement<R> {
    /// Wrap an exact element; fails unless `ψ(f) = 0`, i.e. `f` is supported on ℤₚ^×.
    pub fn new(f: ExpPoly<R>, level: u32) -> Result<Self> {
        if !f.psi().is_zero() {
            return Err(Error::InvalidArgument(
                "element is not killed by ψ (not supported on the units)".into(),
            ));
        }
        Ok(PsiZeroElement {
            f,
            level: level.max(1),
            accuracy: Val::Inf,
        })
    }

    /// `Res_{ℤₚ^×}(f)` as a ψ = 0 element.
    pub fn restrict_from(f: &ExpPoly<R>, level: u32) -> Self {
        PsiZeroElement {
            f: f.restrict_units(),
            level: level.max(1),
            accuracy: Val::Inf,
        }
    }

    /// The underlying exact sum.
    pub fn element(&self) -> &ExpPoly<R> {
        &self.f
    }

    /// Decomposition level `N`.
    pub fn level(&self) -> u32 {
        self.level
    }

    /// Absolute accuracy of the coefficients (`Inf` when exact).
    pub fn accuracy(&self) -> Val {
        self.accuracy
    }

    /// The same element viewed at another decomposition level.
    pub fn with_level(&self, level: u32) -> Self {
        PsiZeroElement {
            level: level.max(1),
            ..self.clone()
        }
    }

    /// The components `f_i = ψ^N((1+T)^{−i} f)` for `i ∈ (ℤ/p^Nℤ)^×` (nonzero ones only).
    pub fn components(&self) -> Vec<(i64, ExpPoly<R>)> {
        let p = self.f.p();
        let q = (p as i64).pow(self.level);
        (1..q)
            .filter(|i| i % p as i64 != 0)
            .filter_map(|i| {
                let mut g = self.f.mul_x_power(&BigRational::from_integer(BigInt::from(-i)));
                for _ in 0..self.level {
                    g = g.psi();
                }
                (!g.is_zero()).then_some((i, g))
            })
            .collect()
    }

    /// `Σ_i (1+T)^i φ^N(f_i)` from components.
    pub fn reconstruct(p: u32, level: u32, components: &[(i64, ExpPoly<R>)], template: &R) -> ExpPoly<R> {
        let mut acc = ExpPoly::zero(p, template);
        for (i, g) in components {
            let mut h = g.clone();
            for _ in 0..level {
                h = h.phi();
            }
            acc = acc.add(&h.mul_x_power(&BigRational::from_integer(BigInt::from(*i))));
        }
        acc
    }

    /// Windowed view.
    pub fn to_window(&self, cap: Window) -> Result<RobbaElement<R>> {
        self.f.to_window(cap)
    }

    /// Defect against another element: relative valuation of the difference,
    /// capped by the accuracies of both sides.
    pub fn defect(&self, other: &Self) -> Val {
        let d = self.f.defect(&other.f);
        let size = self.f.min_valuation().min(other.f.min_valuation());
        let acc = match (self.accuracy.min(other.accuracy), size) {
            (Val::Inf, _) => Val::Inf,
            (Val::Fin(a), Val::Fin(s)) => Val::Fin(a - s),
            (Val::Fin(a), Val::Inf) => Val::Fin(a),
        };
        d.min(acc)
    }

    fn derived(&self, f: ExpPoly<R>, accuracy: Val) -> Self {
        PsiZeroElement {
            f,
            level: self.level,
            accuracy: self.accuracy.min(accuracy),
        }
    }

    /// `w_*`: the pushforward along `x ↦ x⁻¹` (an involution).
    pub fn w_star(&self) -> Result<Self> {
        Ok(self.derived(self.f.w_star()?, Val::Inf))
    }

    /// `σ_a` for a unit `a`.
    pub fn sigma(&self, a: &BigRational) -> Result<Self> {
        Ok(self.derived(self.f.sigma(a)?, Val::Inf))
    }

    /// `∂`.
    pub fn partial(&self) -> Self {
        self.derived(self.f.partial(), Val::Inf)
    }

    /// `∇`.
    pub fn nabla(&self) -> Self {
        self.derived(self.f.nabla(), Val::Inf)
    }

    /// `Res_{b+pⁿℤₚ}` (for `b` a unit mod p).
    pub fn restrict(&self, b: i64, n: u32) -> Self {
        self.derived(self.f.restrict(b, n), Val::Inf)
    }

    /// Sum.
    pub fn add(&self, other: &Self) -> Self {
        PsiZeroElement {
            f: self.f.add(&other.f),
            level: self.level.max(other.level),
            accuracy: self.accuracy.min(other.accuracy),
        }
    }

    /// Multiplication by a constant.
    pub fn scale(&self, c: &R) -> Self {
        self.derived(self.f.scale(c), Val::Inf)
    }
}

/// The constant `C_δ = min(v(κ(δ)), 0) − 1/(p−1)` governing convergence of `m_δ`.
pub fn convergence_constant<K: Scalar>(delta: &Character<K>) -> BigRational {
    let p = delta.p();
    let v = match delta.weight().val() {
        Val::Inf => 0,
        Val::Fin(v) => v.min(0),
    };
    BigRational::from_integer(BigInt::from(v)) - BigRational::new(BigInt::one(), BigInt::from(p - 1))
}

/// The default level: the smallest `N` with `N > −C_δ + 1`.
pub fn default_level<K: Scalar>(delta: &Character<K>) -> u32 {
    let bound = -convergence_constant(delta) + BigRational::one();
    let n = bound.floor().to_integer() + BigInt::one();
    n.to_u32().unwrap_or(1).max(1)
}

/// `m_δ` by the defining series at level `N` (default: [`default_level`]).
///
/// Each term `c t^k (1+T)^a` contributes, with `i ≡ a mod p^N`,
/// `Σ_j binom(κ, j) δ(i) i^{−j} Σ_l binom(j, l) k^{(l)} (a−i)^{j−l} t^{k−l} (1+T)^a`;
/// the `j`-th summand has valuation at least `v(c) + j C_δ + (j − k) N`, and the
/// sum is truncated once that bound reaches `v(c) + precision`.
pub fn m_delta<K: Scalar>(
    delta: &Character<K>,
    f: &PsiZeroElement<CoeffElement<K>>,
    level: Option<u32>,
) -> Result<PsiZeroElement<CoeffElement<K>>> {
    let p = delta.p();
    let ring = delta.ring().clone();
    let prec = ring.precision() as i64;
    let n = level.unwrap_or_else(|| default_level(delta));
    let c_delta = convergence_constant(delta);
    let rate = BigRational::from_integer(BigInt::from(n)) + &c_delta;
    if !rate.is_positive() {
        return Err(Error::NonConvergence(format!(
            "m_delta at level {n}: N + C_delta = {rate} is not positive"
        )));
    }
    let kappa = delta.weight().clone();
    let terminating = integer_value(&kappa).filter(|k| *k >= 0);
    let q = BigInt::from(p).pow(n);
    let zero = ring.zero();
    let mut out = ExpPoly::zero(p, &zero);
    let mut accuracy = Val::Inf;
    for ((a, k), c) in f.element().terms() {
        let k = *k;
        let i_big = rational_mod_pk(a, p, n).ok_or_else(|| Error::InvalidArgument(format!("{a} is not p-integral")))?;
        let i = BigRational::from_integer(i_big.clone());
        let i_small = i_big
            .to_i64()
            .ok_or_else(|| Error::InvalidArgument("residue representative too large".into()))?;
        debug_assert!(i_big < q);
        let delta_i = delta.eval_int(i_small)?;
        let i_inv = ring.rational(&i.recip());
        let diff = a - &i;
        let vc = match c.valuation(p) {
            Val::Inf => continue,
            Val::Fin(v) => v,
        };
        let target = BigRational::from_integer(BigInt::from(vc + prec));
        // binom(κ, j), i^{−j}, built incrementally.
        let mut binom = ring.one();
        let mut i_pow = ring.one();
        let mut j: u32 = 0;
        loop {
            let exact_end = match terminating {
                Some(kk) => j as i64 > kk,
                None => false,
            } || (diff.is_zero() && j > k);
            if exact_end {
                break;
            }
            let bound = BigRational::from_integer(BigInt::from(vc))
                + BigRational::from_integer(BigInt::from(j)) * &c_delta
                + BigRational::from_integer(BigInt::from(j as i64 - k as i64) * BigInt::from(n));
            if bound >= target {
                let cut = bound.floor().to_integer().to_i64().unwrap_or(i64::MAX);
                accuracy = accuracy.min(Val::Fin(cut));
                break;
            }
            let head = c.clone() * binom.clone() * delta_i.clone() * i_pow.clone();
            if !head.is_zero_elem() {
                for l in 0..=j.min(k) {
                    let mut coef = BigRational::from_integer(binomial(j, l));
                    coef *= BigRational::from_integer(falling(k, l));
                    coef *= num_traits::pow(diff.clone(), (j - l) as usize);
                    if coef.is_zero() {
                        continue;
                    }
                    let term = head.clone() * ring.rational(&coef);
                    out = out.add(&ExpPoly::monomial(p, term, k - l, a.clone())?);
                }
            }
            binom = binom * (kappa.clone() - ring.int(j as i64)) * ring.rational(&BigRational::new(BigInt::one(), BigInt::from(j + 1)));
            i_pow = i_pow * i_inv.clone();
            j += 1;
        }
    }
    let out = match accuracy {
        Val::Fin(abs) => round_exppoly(&out, p, abs),
        Val::Inf => out,
    };
    Ok(PsiZeroElement {
        f: out,
        level: n,
        accuracy: f.accuracy().min(accuracy),
    })
}

fn round_exppoly<K: Scalar>(f: &ExpPoly<CoeffElement<K>>, p: u32, abs: i64) -> ExpPoly<CoeffElement<K>> {
    let mut out = ExpPoly::zero(p, f.zero_coeff());
    for ((a, k), c) in f.terms() {
        let r = round_element(c, p, abs);
        if let Ok(m) = ExpPoly::monomial(p, r, *k, a.clone()) {
            out = out.add(&m);
        }
    }
    out
}

fn binomial(n: u32, k: u32) -> BigInt {
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

fn falling(k: u32, l: u32) -> BigInt {
    (0..l).fold(BigInt::one(), |acc, i| acc * BigInt::from(k - i))
}

/// `m_δ` in closed form: multiplication of the distribution by `δ`,
/// `t^k (1+T)^a ↦ δ(a) Σ_j binom(k, j) (κ)_{k−j} a^{−(k−j)} t^j (1+T)^a`,
/// where `(κ)_n` is the falling factorial (the derivatives of `δ` at `a` are
/// `δ^{(n)}(a) = (κ)_n a^{−n} δ(a)`).
pub fn m_delta_closed_form<K: Scalar>(
    delta: &Character<K>,
    f: &PsiZeroElement<CoeffElement<K>>,
) -> Result<PsiZeroElement<CoeffElement<K>>> {
    let p = delta.p();
    let ring = delta.ring().clone();
    let kappa = delta.weight().clone();
    let mut out = ExpPoly::zero(p, &ring.zero());
    for ((a, k), c) in f.element().terms() {
        let da = delta.eval_rational(a)?;
        for j in 0..=*k {
            let n = k - j;
            let mut fall = ring.one();
            for i in 0..n {
                fall = fall * (kappa.clone() - ring.int(i as i64));
            }
            let coef = BigRational::from_integer(binomial(*k, j)) * num_traits::pow(a.recip(), n as usize);
            let term = c.clone() * da.clone() * fall * ring.rational(&coef);
            out = out.add(&ExpPoly::monomial(p, term, j, a.clone())?);
        }
    }
    Ok(PsiZeroElement {
        f: out,
        level: f.level(),
        accuracy: f.accuracy(),
    })
}

/// The character `δ = δ₁ δ₂⁻¹ χ⁻¹` attached to a pair.
pub fn pair_delta<K: Scalar>(d1: &Character<K>, d2: &Character<K>) -> Character<K> {
    d1.div(d2).div(&Character::chi(d1.ring()))
}

/// The central character `ω = δ₁ δ₂ χ⁻¹` attached to a pair.
pub fn pair_omega<K: Scalar>(d1: &Character<K>, d2: &Character<K>) -> Character<K> {
    d1.mul(d2).div(&Character::chi(d1.ring()))
}

/// `δ₁(−1) = (−1)^{tame index}` (−1 is a root of unity since `p > 2`).
pub fn sign_at_minus_one<K: Scalar>(d: &Character<K>) -> CoeffElement<K> {
    let ring = d.ring();
    if d.tame() % 2 == 0 {
        ring.one()
    } else {
        ring.int(-1)
    }
}

/// `ι_{δ₁,δ₂} = δ₁(−1) · w_* ∘ m_{δ⁻¹}` with `δ = δ₁δ₂⁻¹χ⁻¹`.
pub fn iota<K: Scalar>(
    d1: &Character<K>,
    d2: &Character<K>,
    f: &PsiZeroElement<CoeffElement<K>>,
    level: Option<u32>,
) -> Result<PsiZeroElement<CoeffElement<K>>> {
    let delta_inv = pair_delta(d1, d2).inv();
    let twisted = m_delta(&delta_inv, f, level)?;
    Ok(twisted.w_star()?.scale(&sign_at_minus_one(d1)))
}

/// `ι_{δ₁,δ₂}` through the closed form of `m_{δ⁻¹}` (the oracle for [`iota`]).
pub fn iota_closed_form<K: Scalar>(
    d1: &Character<K>,
    d2: &Character<K>,
    f: &PsiZeroElement<CoeffElement<K>>,
) -> Result<PsiZeroElement<CoeffElement<K>>> {
    let delta_inv = pair_delta(d1, d2).inv();
    let twisted = m_delta_closed_form(&delta_inv, f)?;
    Ok(twisted.w_star()?.scale(&sign_at_minus_one(d1)))
}

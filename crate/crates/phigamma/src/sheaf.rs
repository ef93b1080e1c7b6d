//! The rank-one G̃-module `Δ ⊠_{ω,ι} P¹` for `Δ = R(δ₁)` at finite precision.
//!
//! An element is a compatible pair `z = (z₁, z₂)` with
//! `Res_{ℤₚ^×}(z₁) = ι(Res_{ℤₚ^×}(z₂))`, where `ι = δ₁(−1)·w_* ∘ m_{ε⁻¹}` with the
//! gluing character `ε = δ₁δ₂⁻¹χ` (see [`gluing_character`]); `z₁` is the
//! restriction to ℤₚ and `z₂` the restriction to ℤₚ of `w·z`.  The generators act by
//!
//! * `w = (0 1; 1 0)`: `(z₂, z₁)`;
//! * `center(a)`: `(ω(a)z₁, ω(a)z₂)` with `ω = δ₁δ₂χ⁻¹`;
//! * `diag(a,1)`, `a ∈ ℤₚ^×`: `(δ₁(a)σ_a z₁, ω(a)δ₁(a⁻¹)σ_{a⁻¹} z₂)`;
//! * `diag(p,1)`: `z₂′ = ω(p)ψ(z₂)` and `z₁′ = φ(z₁) + ι(Res_{ℤₚ^×} z₂′)`, where
//!   `φ`, `ψ` are those of `Δ` (`δ₁(p)φ` and `δ₁(p)⁻¹ψ` on the underlying ring);
//! * `upper(b)`, `b ∈ pℤₚ`: `z₁′ = (1+T)^b z₁` and
//!   `z₂′ = u_b(Res_{pℤₚ} z₂) + ι(Res_{ℤₚ^×} z₁′)`, with
//!   `u_b = ω(1+b)·(1 −1; 0 1)∘ι∘((1+b)⁻², b/(1+b); 0 1)∘ι∘(1 (1+b)⁻¹; 0 1)`,
//!   where `(a b; 0 1)` acts on `Δ` by `δ₁(a)(1+T)^b σ_a`.
//!
//! The action is written once against [`SheafComponent`], and it has two
//! realizations:
//!
//! * [`Dist`]: exact sums `Σ c t^k (1+T)^a`, which are Amice transforms of
//!   finite combinations of Dirac derivatives. On these, `ι` is the `m_δ` series
//!   followed by `w_*`.
//! * [`JetFn`]: locally analytic functions given by their Taylor jets at
//!   rational points. They model the dual sheaf `Δ̌ ⊠_{ω⁻¹,ι̌} P¹` with
//!   `Δ̌ = R(δ₁⁻¹χ)` through Colmez transforms:
//!   * `(1+T)^b ↦ g(x − b)`
//!   * `σ_a ↦ a⁻¹g(x/a)`
//!   * `φ ↦ 1_{pℤₚ}g(x/p)`
//!   * `ψ ↦ g(px)`
//!   * `ι̌ g(x) = δ₁(−1)ε⁻¹(x)g(1/x)` on ℤₚ^×
//!
//! The residue pairing `{ž, z} = res₀(⟨σ_{−1}(ž), z⟩ dT/(1+T))` reads
//! `{ž, z} = −∫ φ_ž dμ_z` in these models. The P¹-pairing
//! `{ž, z}_{P¹} = {ž₁, z₁} + {Res_{pℤₚ} ž₂, Res_{pℤₚ} z₂}` must then be G-invariant.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use serde::Serialize;

use crate::characters::Character;
use crate::coefficients::{binom_ring, rational_mod_pk, rational_valuation, CoeffElement, CoeffRing, Scalar, Val};
use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::robba::ExpPoly;
use crate::twists::{m_delta, m_delta_closed_form, pair_omega, sign_at_minus_one, PsiZeroElement};
use crate::Ring;

/// Digits below the working precision still required of a certified identity.
pub const SHEAF_GUARD_DIGITS: i64 = 4;

/// A generator of G̃ = GL₂(ℚₚ) acting on the sheaf.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Generator {
    /// `(0 1; 1 0)`.
    W,
    /// `(a 0; 0 a)` for `a ∈ ℚₚ^×`.
    Center(BigRational),
    /// `(a 0; 0 1)` for `a ∈ ℤₚ^×`.
    Diag(BigRational),
    /// `(p 0; 0 1)`.
    DiagP,
    /// `(1 b; 0 1)` for `b ∈ pℤₚ`.
    Upper(BigRational),
}

impl std::fmt::Display for Generator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Generator::W => write!(f, "w"),
            Generator::Center(a) => write!(f, "center({a})"),
            Generator::Diag(a) => write!(f, "diag({a},1)"),
            Generator::DiagP => write!(f, "diag(p,1)"),
            Generator::Upper(b) => write!(f, "upper({b})"),
        }
    }
}

/// Render a word `g₁·g₂·…·g_n` (the rightmost letter acts first).
pub fn word_to_string(word: &[Generator]) -> String {
    if word.is_empty() {
        return "1".into();
    }
    word.iter().map(|g| g.to_string()).collect::<Vec<_>>().join("·")
}

/// The operations of `Δ` (and of `Δ ⊠ ℤₚ^×`, `Δ ⊠ pℤₚ`) the action is built from.
pub trait SheafComponent<K: Scalar>: Clone {
    /// `σ_a` of the underlying ring, `a ∈ ℤₚ^×`.
    fn sigma(&self, a: &BigRational) -> Result<Self>;
    /// Multiplication by `(1+T)^b`, `b ∈ ℤₚ`.
    fn translate(&self, b: &BigRational) -> Result<Self>;
    /// φ of the underlying ring.
    fn phi(&self) -> Result<Self>;
    /// ψ of the underlying ring.
    fn psi(&self) -> Result<Self>;
    /// `Res_{ℤₚ^×}`.
    fn res_units(&self) -> Self;
    /// `Res_{pℤₚ}`.
    fn res_pzp(&self) -> Self;
    /// Scalar multiple.
    fn scale(&self, c: &CoeffElement<K>) -> Self;
    /// Sum.
    fn add(&self, other: &Self) -> Self;
    /// Relative defect of `self − other` (the larger, the closer).
    fn defect(&self, other: &Self) -> Result<Val>;
}

// ---------------------------------------------------------------------------
// Distribution side
// ---------------------------------------------------------------------------

/// A component realized as an exact sum `Σ c t^k (1+T)^a`, with the absolute
/// accuracy to which its coefficients are certified.
#[derive(Debug, Clone, PartialEq)]
pub struct Dist<K: Scalar> {
    f: ExpPoly<CoeffElement<K>>,
    accuracy: Val,
}

impl<K: Scalar> Dist<K> {
    /// An exact component.
    pub fn exact(f: ExpPoly<CoeffElement<K>>) -> Self {
        Dist { f, accuracy: Val::Inf }
    }

    /// A component with a stated absolute accuracy.
    pub fn with_accuracy(f: ExpPoly<CoeffElement<K>>, accuracy: Val) -> Self {
        Dist { f, accuracy }
    }

    /// The underlying sum.
    pub fn element(&self) -> &ExpPoly<CoeffElement<K>> {
        &self.f
    }

    /// Absolute accuracy of the coefficients.
    pub fn accuracy(&self) -> Val {
        self.accuracy
    }

    fn map(&self, f: ExpPoly<CoeffElement<K>>) -> Self {
        Dist { f, accuracy: self.accuracy }
    }

    fn shift_accuracy(&self, by: Val) -> Val {
        match (self.accuracy, by) {
            (Val::Fin(a), Val::Fin(b)) => Val::Fin(a + b),
            (Val::Fin(a), Val::Inf) => Val::Fin(a),
            (Val::Inf, _) => Val::Inf,
        }
    }
}

impl<K: Scalar> SheafComponent<K> for Dist<K> {
    fn sigma(&self, a: &BigRational) -> Result<Self> {
        Ok(self.map(self.f.sigma(a)?))
    }

    fn translate(&self, b: &BigRational) -> Result<Self> {
        Ok(self.map(self.f.mul_x_power(b)))
    }

    fn phi(&self) -> Result<Self> {
        Ok(self.map(self.f.phi()))
    }

    fn psi(&self) -> Result<Self> {
        // ψ(t^k(1+T)^a) = p^{−k} t^k (1+T)^{a/p}: the absolute error may grow by p^{deg}.
        let deg = self.f.terms().map(|((_, k), _)| *k as i64).max().unwrap_or(0);
        let accuracy = match self.accuracy {
            Val::Fin(a) => Val::Fin(a - deg),
            Val::Inf => Val::Inf,
        };
        Ok(Dist { f: self.f.psi(), accuracy })
    }

    fn res_units(&self) -> Self {
        self.map(self.f.restrict_units())
    }

    fn res_pzp(&self) -> Self {
        self.map(self.f.restrict_pzp())
    }

    fn scale(&self, c: &CoeffElement<K>) -> Self {
        Dist {
            f: self.f.scale(c),
            accuracy: self.shift_accuracy(c.val()),
        }
    }

    fn add(&self, other: &Self) -> Self {
        Dist {
            f: self.f.add(&other.f),
            accuracy: self.accuracy.min(other.accuracy),
        }
    }

    fn defect(&self, other: &Self) -> Result<Val> {
        let d = self.f.defect(&other.f);
        let size = self.f.min_valuation().min(other.f.min_valuation());
        let cap = match (self.accuracy.min(other.accuracy), size) {
            (Val::Inf, _) => Val::Inf,
            (Val::Fin(a), Val::Fin(s)) => Val::Fin(a - s),
            (Val::Fin(a), Val::Inf) => Val::Fin(a),
        };
        Ok(d.min(cap))
    }
}

// ---------------------------------------------------------------------------
// Jet-function side
// ---------------------------------------------------------------------------

type JetClosure<K> = dyn Fn(&BigRational, usize) -> Result<Poly<CoeffElement<K>>>;

/// A locally analytic function on ℤₚ known through its Taylor jets at rational
/// points: `taylor(x, n)` is `Σ_{j ≤ n} g^{(j)}(x)/j! · ε^j`.
#[derive(Clone)]
pub struct JetFn<K: Scalar> {
    ring: Arc<CoeffRing<K>>,
    p: u32,
    jet: Arc<JetClosure<K>>,
}

impl<K: Scalar> std::fmt::Debug for JetFn<K> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "JetFn(p = {})", self.p)
    }
}

fn q(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn in_pzp(x: &BigRational, p: u32) -> bool {
    x.is_zero() || !matches!(rational_valuation(x, p), Val::Fin(0))
}

impl<K: Scalar> JetFn<K> {
    /// A function from an arbitrary jet closure.
    pub fn from_jets(
        ring: &Arc<CoeffRing<K>>,
        jet: impl Fn(&BigRational, usize) -> Result<Poly<CoeffElement<K>>> + 'static,
    ) -> Self {
        JetFn {
            ring: ring.clone(),
            p: ring.p(),
            jet: Arc::new(jet),
        }
    }

    /// The zero function.
    pub fn zero(ring: &Arc<CoeffRing<K>>) -> Self {
        let r = ring.clone();
        Self::from_jets(ring, move |_, _| Ok(Poly::zero(&r.zero())))
    }

    /// The polynomial `Σ c_i x^i` on all of ℤₚ.
    pub fn polynomial(ring: &Arc<CoeffRing<K>>, coeffs: Vec<CoeffElement<K>>) -> Self {
        let zero = ring.zero();
        let poly = Poly::new(coeffs, &zero);
        Self::from_jets(ring, move |x, n| {
            let xr = zero.from_rational_like(x);
            let mut out = Vec::with_capacity(n + 1);
            let mut d = poly.clone();
            let mut fact = BigRational::one();
            for j in 0..=n {
                if j > 0 {
                    fact *= q(j as i64);
                }
                out.push(d.eval(&xr) * zero.from_rational_like(&fact.recip()));
                d = d.derivative();
            }
            Ok(Poly::new(out, &zero))
        })
    }

    /// Taylor expansion at `x` to order `n`.
    pub fn taylor(&self, x: &BigRational, n: usize) -> Result<Poly<CoeffElement<K>>> {
        Ok((self.jet)(x, n)?.truncate(n))
    }

    /// `g^{(k)}(x)`.
    pub fn derivative_at(&self, x: &BigRational, k: usize) -> Result<CoeffElement<K>> {
        let t = self.taylor(x, k)?;
        let fact = (1..=k as i64).fold(BigRational::one(), |acc, i| acc * q(i));
        Ok(t.coeff(k) * self.ring.rational(&fact))
    }

    fn wrap(&self, jet: impl Fn(&BigRational, usize) -> Result<Poly<CoeffElement<K>>> + 'static) -> Self {
        Self::from_jets(&self.ring, jet)
    }

    /// `x ↦ g(αx + β)`.
    pub fn affine(&self, alpha: &BigRational, beta: &BigRational) -> Self {
        let g = self.clone();
        let (alpha, beta) = (alpha.clone(), beta.clone());
        let ring = self.ring.clone();
        self.wrap(move |x, n| {
            let t = g.taylor(&(&alpha * x + &beta), n)?;
            let a = ring.rational(&alpha);
            let mut pow = ring.one();
            let coeffs = t
                .coeffs()
                .iter()
                .map(|c| {
                    let v = c.clone() * pow.clone();
                    pow = pow.clone() * a.clone();
                    v
                })
                .collect();
            Ok(Poly::new(coeffs, &ring.zero()))
        })
    }

    /// `x ↦ g(1/x)` (jets requested at `x = 0` are an error).
    pub fn invert(&self) -> Self {
        let g = self.clone();
        let ring = self.ring.clone();
        self.wrap(move |x, n| {
            if x.is_zero() {
                return Err(Error::InvalidArgument("g(1/x) has no jet at x = 0".into()));
            }
            let t = g.taylor(&x.recip(), n)?;
            // 1/(x + ε) − 1/x = Σ_{m ≥ 1} (−1)^m x^{−m−1} ε^m.
            let mut h = vec![ring.zero()];
            for m in 1..=n {
                let sign = if m % 2 == 0 { q(1) } else { q(-1) };
                h.push(ring.rational(&(sign * num_traits::pow(x.recip(), m + 1))));
            }
            let h = Poly::new(h, &ring.zero());
            Ok(t.compose(&h).truncate(n))
        })
    }

    /// `x ↦ δ(x) g(x)` for a character δ (jets at non-units are an error).
    pub fn mul_character(&self, delta: &Character<K>) -> Self {
        let g = self.clone();
        let ring = self.ring.clone();
        let delta = delta.clone();
        self.wrap(move |x, n| {
            // δ(x + ε) = δ(x) Σ_m binom(κ, m) x^{−m} ε^m.
            let dx = delta.eval_rational(x)?;
            let kappa = delta.weight().clone();
            let series: Vec<_> = (0..=n)
                .map(|m| dx.clone() * binom_ring(&kappa, m) * ring.rational(&num_traits::pow(x.recip(), m)))
                .collect();
            let s = Poly::new(series, &ring.zero());
            Ok(g.taylor(x, n)?.mul(&s).truncate(n))
        })
    }

    /// `1_{b + p^m ℤₚ} · g`.
    pub fn indicator(&self, b: i64, m: u32) -> Self {
        let g = self.clone();
        let ring = self.ring.clone();
        let p = self.p;
        let modulus = BigInt::from(p).pow(m);
        let target = ((BigInt::from(b) % &modulus) + &modulus) % &modulus;
        self.wrap(move |x, n| {
            let r = rational_mod_pk(x, p, m)
                .ok_or_else(|| Error::InvalidArgument("jet requested outside ℤₚ".into()))?;
            if r == target {
                g.taylor(x, n)
            } else {
                Ok(Poly::zero(&ring.zero()))
            }
        })
    }

    /// Pointwise integer-free linear combination helper.
    fn combine(&self, other: &Self, f: fn(Poly<CoeffElement<K>>, &Poly<CoeffElement<K>>) -> Poly<CoeffElement<K>>) -> Self {
        let (a, b) = (self.clone(), other.clone());
        self.wrap(move |x, n| Ok(f(a.taylor(x, n)?, &b.taylor(x, n)?)))
    }

    /// Difference `g − h`.
    pub fn sub(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a.sub(b))
    }

    /// Pairing against a distribution: `{ž, z} = −∫ φ_ž dμ_z`, with
    /// `∫ g d(t^k(1+T)^a) = g^{(k)}(a)`.
    ///
    /// Returns the value together with its absolute accuracy (`accuracy(z)`
    /// plus the smallest valuation of the jets it was multiplied by).
    pub fn pair(&self, z: &Dist<K>) -> Result<(CoeffElement<K>, Val)> {
        let mut acc = self.ring.zero();
        let mut jet_val = Val::Inf;
        for ((a, k), c) in z.element().terms() {
            let d = self.derivative_at(a, *k as usize)?;
            jet_val = jet_val.min(d.val());
            acc = acc + c.clone() * d;
        }
        let accuracy = match (z.accuracy(), jet_val) {
            (Val::Fin(x), Val::Fin(y)) => Val::Fin(x + y),
            (Val::Fin(x), Val::Inf) => Val::Fin(x),
            (Val::Inf, _) => Val::Inf,
        };
        Ok((-acc, accuracy))
    }

    /// The sample points at which [`SheafComponent::defect`] compares jets.
    fn sample_points(&self) -> Vec<BigRational> {
        let p = self.p as i64;
        let mut pts: Vec<BigRational> = (0..p * p).map(q).collect();
        pts.extend([BigRational::new(1.into(), 2.into()), BigRational::new((-1).into(), 3.into()), BigRational::new(p.into(), 2.into())]);
        pts.retain(|x| rational_valuation(&BigRational::from_integer(x.denom().clone()), self.p) == Val::Fin(0));
        pts
    }
}

/// Order of the jets compared by the sampled defect of [`JetFn`].
const JET_SAMPLE_ORDER: usize = 2;

impl<K: Scalar> SheafComponent<K> for JetFn<K> {
    fn sigma(&self, a: &BigRational) -> Result<Self> {
        if rational_valuation(a, self.p) != Val::Fin(0) {
            return Err(Error::InvalidArgument(format!("σ_a needs a unit, got {a}")));
        }
        Ok(self.affine(&a.recip(), &BigRational::zero()).scale(&self.ring.rational(&a.recip())))
    }

    fn translate(&self, b: &BigRational) -> Result<Self> {
        Ok(self.affine(&BigRational::one(), &-b))
    }

    fn phi(&self) -> Result<Self> {
        let p = q(self.p as i64);
        Ok(self.affine(&p.recip(), &BigRational::zero()).res_pzp())
    }

    fn psi(&self) -> Result<Self> {
        Ok(self.affine(&q(self.p as i64), &BigRational::zero()))
    }

    fn res_units(&self) -> Self {
        let g = self.clone();
        let ring = self.ring.clone();
        let p = self.p;
        self.wrap(move |x, n| if in_pzp(x, p) { Ok(Poly::zero(&ring.zero())) } else { g.taylor(x, n) })
    }

    fn res_pzp(&self) -> Self {
        self.indicator(0, 1)
    }

    fn scale(&self, c: &CoeffElement<K>) -> Self {
        let g = self.clone();
        let c = c.clone();
        self.wrap(move |x, n| Ok(g.taylor(x, n)?.scale(&c)))
    }

    fn add(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a.add(b))
    }

    /// Sampled defect: the relative valuation of the difference of the jets of
    /// order ≤ 2 at the points `0, …, p² − 1`, `1/2`, `−1/3`, `p/2`.
    fn defect(&self, other: &Self) -> Result<Val> {
        let mut diff = Val::Inf;
        let mut size = Val::Inf;
        for x in self.sample_points() {
            let a = self.taylor(&x, JET_SAMPLE_ORDER)?;
            let b = other.taylor(&x, JET_SAMPLE_ORDER)?;
            for j in 0..=JET_SAMPLE_ORDER {
                let (ca, cb) = (a.coeff(j), b.coeff(j));
                size = size.min(ca.val()).min(cb.val());
                diff = diff.min((ca - cb).val());
            }
        }
        Ok(match (diff, size) {
            (Val::Inf, _) => Val::Inf,
            (Val::Fin(d), Val::Fin(s)) => Val::Fin(d - s),
            (Val::Fin(d), Val::Inf) => Val::Fin(d),
        })
    }
}

// ---------------------------------------------------------------------------
// The sheaf
// ---------------------------------------------------------------------------

type Involution<C> = dyn Fn(&C) -> Result<C>;

/// A pair `(z₁, z₂)` of components; see [`P1Sheaf::make_element`].
#[derive(Debug, Clone)]
pub struct SheafElement<C> {
    /// `Res_{ℤₚ}(z)`.
    pub z1: C,
    /// `Res_{ℤₚ}(w·z)`.
    pub z2: C,
    /// Measured compatibility defect.
    pub defect: Val,
}

/// The module `Δ ⊠_{ω,ι} P¹` for a rank-one `Δ`, realized on components of type `C`.
#[derive(Clone)]
pub struct P1Sheaf<K: Scalar, C> {
    ring: Arc<CoeffRing<K>>,
    d1: Character<K>,
    omega: Character<K>,
    iota: Arc<Involution<C>>,
    threshold: i64,
}

impl<K: Scalar, C> std::fmt::Debug for P1Sheaf<K, C> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("P1Sheaf")
            .field("d1", &self.d1)
            .field("omega", &self.omega)
            .field("threshold", &self.threshold)
            .finish()
    }
}

fn certification_threshold<K: Scalar>(ring: &CoeffRing<K>) -> i64 {
    ring.precision() as i64 - SHEAF_GUARD_DIGITS
}

impl<K: Scalar> P1Sheaf<K, Dist<K>> {
    /// `R(δ₁) ⊠_{ω,ι} P¹` on distributions, with `ι` evaluated through the
    /// `m_{ε⁻¹}` series at `level` (default: the convergence level of `ε⁻¹`).
    pub fn distributions(d1: &Character<K>, d2: &Character<K>, level: Option<u32>) -> Self {
        let eps_inv = gluing_character(d1, d2).inv();
        let sign = sign_at_minus_one(d1);
        Self::distributions_with(d1, d2, move |z: &Dist<K>| {
            let f = PsiZeroElement::restrict_from(z.element(), 1);
            let out = m_delta(&eps_inv, &f, level)?.w_star()?.scale(&sign);
            Ok(Dist::with_accuracy(out.element().clone(), out.accuracy().min(z.accuracy())))
        })
    }

    /// Same module, with `ι` from the closed form of `m_{ε⁻¹}` (multiplication of
    /// the distribution by `ε⁻¹`).
    pub fn distributions_closed_form(d1: &Character<K>, d2: &Character<K>) -> Self {
        let eps_inv = gluing_character(d1, d2).inv();
        let sign = sign_at_minus_one(d1);
        Self::distributions_with(d1, d2, move |z: &Dist<K>| {
            let f = PsiZeroElement::restrict_from(z.element(), 1);
            let out = m_delta_closed_form(&eps_inv, &f)?.w_star()?.scale(&sign);
            Ok(Dist::with_accuracy(out.element().clone(), z.accuracy()))
        })
    }

    /// Same module with a caller-supplied involution (used for negative controls).
    pub fn distributions_with(
        d1: &Character<K>,
        d2: &Character<K>,
        iota: impl Fn(&Dist<K>) -> Result<Dist<K>> + 'static,
    ) -> Self {
        let ring = d1.ring().clone();
        P1Sheaf {
            threshold: certification_threshold(&ring),
            ring,
            d1: d1.clone(),
            omega: pair_omega(d1, d2),
            iota: Arc::new(iota),
        }
    }

    /// A random exact distribution `Σ c t^k (1+T)^a` with `terms` terms,
    /// `k ≤ 2`, small integer coefficients and exponents `n/m` with `p ∤ m`.
    pub fn random_dist(&self, rng: &mut impl Rng, terms: usize, support: Support) -> Result<Dist<K>> {
        let p = self.ring.p() as i64;
        let mut f = ExpPoly::zero(p as u32, &self.ring.zero());
        for _ in 0..terms {
            let den = [1i64, 2, 3][rng.gen_range(0..3)];
            let num = loop {
                let n: i64 = rng.gen_range(-(p * p)..p * p);
                let a = BigRational::new(n.into(), den.into());
                let unit = !in_pzp(&a, p as u32);
                match support {
                    Support::Zp => break n,
                    Support::Units if unit => break n,
                    Support::PZp if !unit => break n,
                    _ => {}
                }
            };
            let c = self.ring.int(rng.gen_range(1..6) * if rng.gen_bool(0.5) { 1 } else { -1 });
            let k = rng.gen_range(0..3);
            f = f.add(&ExpPoly::monomial(p as u32, c, k, BigRational::new(num.into(), den.into()))?);
        }
        Ok(Dist::exact(f))
    }

    /// A random valid pair: `z₂` arbitrary, `z₁ = (part on pℤₚ) + ι(Res_{ℤₚ^×} z₂)`.
    pub fn random_element(&self, rng: &mut impl Rng) -> Result<SheafElement<Dist<K>>> {
        let z2 = self.random_dist(rng, 4, Support::Zp)?;
        let h = self.random_dist(rng, 2, Support::PZp)?;
        let z1 = h.add(&self.iota(&z2.res_units())?);
        self.make_element(z1, z2)
    }
}

/// The gluing character `ε = δ₁δ₂⁻¹χ` of `ι = δ₁(−1)·w_* ∘ m_{ε⁻¹}`.
///
/// Gluing must intertwine the torus actions on the two charts,
/// `ι ∘ diag(a,1) = ω(a)·diag(a⁻¹,1) ∘ ι` on `Δ ⊠ ℤₚ^×`, and with
/// `diag(a,1) = δ₁(a)σ_a` and `m_ε σ_a = ε(a) σ_a m_ε` this forces
/// `ε = δ₁²ω⁻¹ = δ₁δ₂⁻¹χ`.
pub fn gluing_character<K: Scalar>(d1: &Character<K>, d2: &Character<K>) -> Character<K> {
    d1.div(d2).mul(&Character::chi(d1.ring()))
}

/// Where randomly drawn distributions are supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Support {
    /// All of ℤₚ.
    Zp,
    /// ℤₚ^×.
    Units,
    /// pℤₚ.
    PZp,
}

impl<K: Scalar> P1Sheaf<K, JetFn<K>> {
    /// The dual sheaf `Δ̌ ⊠_{ω⁻¹,ι̌} P¹` of `R(δ₁) ⊠_{ω,ι} P¹`, on jet functions:
    /// `Δ̌ = R(δ₁⁻¹χ)` and `ι̌ g(x) = δ₁(−1) ε⁻¹(x) g(1/x)` on ℤₚ^× (the adjoint of `ι` for `{·,·}`).
    pub fn dual_functions(d1: &Character<K>, d2: &Character<K>) -> Self {
        let ring = d1.ring().clone();
        let chi = Character::chi(&ring);
        let eps_inv = gluing_character(d1, d2).inv();
        let sign = sign_at_minus_one(d1);
        P1Sheaf {
            threshold: certification_threshold(&ring),
            ring,
            d1: d1.inv().mul(&chi),
            omega: pair_omega(d1, d2).inv(),
            iota: Arc::new(move |g: &JetFn<K>| {
                Ok(g.res_units().invert().mul_character(&eps_inv).res_units().scale(&sign))
            }),
        }
    }

    /// A random polynomial of degree ≤ 3, optionally cut to a class mod p.
    pub fn random_function(&self, rng: &mut impl Rng) -> JetFn<K> {
        let coeffs = (0..4).map(|_| self.ring.int(rng.gen_range(-4..5))).collect();
        let g = JetFn::polynomial(&self.ring, coeffs);
        match rng.gen_range(0..3) {
            0 => g,
            1 => g.indicator(rng.gen_range(0..self.ring.p() as i64), 1),
            _ => g.res_pzp(),
        }
    }

    /// A random valid pair: `ž₂` arbitrary, `ž₁ = (part on pℤₚ) + ι̌(Res_{ℤₚ^×} ž₂)`.
    pub fn random_element(&self, rng: &mut impl Rng) -> Result<SheafElement<JetFn<K>>> {
        let z2 = self.random_function(rng);
        let h = self.random_function(rng).res_pzp();
        let z1 = h.add(&self.iota(&z2.res_units())?);
        self.make_element(z1, z2)
    }
}

impl<K: Scalar, C: SheafComponent<K>> P1Sheaf<K, C> {
    /// The coefficient ring.
    pub fn ring(&self) -> &Arc<CoeffRing<K>> {
        &self.ring
    }

    /// The character of `Δ` (`δ₁`, or `δ₁⁻¹χ` on the dual side).
    pub fn delta1(&self) -> &Character<K> {
        &self.d1
    }

    /// The central character.
    pub fn omega(&self) -> &Character<K> {
        &self.omega
    }

    /// Certification threshold (working precision minus guard digits).
    pub fn threshold(&self) -> i64 {
        self.threshold
    }

    /// Override the certification threshold.
    pub fn with_threshold(mut self, threshold: i64) -> Self {
        self.threshold = threshold;
        self
    }

    /// The involution on components supported on ℤₚ^×.
    pub fn iota(&self, c: &C) -> Result<C> {
        (self.iota)(c)
    }

    /// Compatibility defect `Res_{ℤₚ^×}(z₁) − ι(Res_{ℤₚ^×}(z₂))`.
    pub fn compatibility_defect(&self, z1: &C, z2: &C) -> Result<Val> {
        z1.res_units().defect(&self.iota(&z2.res_units())?)
    }

    /// Certify a pair; fails with `CompatibilityViolation` below threshold.
    pub fn make_element(&self, z1: C, z2: C) -> Result<SheafElement<C>> {
        let defect = self.compatibility_defect(&z1, &z2)?;
        if !defect.at_least(self.threshold) {
            return Err(Error::CompatibilityViolation(defect.or_cap(i64::MAX)));
        }
        Ok(SheafElement { z1, z2, defect })
    }

    fn unit_check(&self, a: &BigRational, what: &str) -> Result<()> {
        if a.is_zero() || rational_valuation(a, self.ring.p()) != Val::Fin(0) {
            return Err(Error::InvalidArgument(format!("{what} needs a p-adic unit, got {a}")));
        }
        Ok(())
    }

    /// `(a b; 0 1)` on components: `δ₁(a)(1+T)^b σ_a`.
    fn affine(&self, a: &BigRational, b: &BigRational, z: &C) -> Result<C> {
        Ok(z.sigma(a)?.translate(b)?.scale(&self.d1.eval_rational(a)?))
    }

    /// `u_b` on components supported on pℤₚ.
    pub fn u_b(&self, b: &BigRational, z: &C) -> Result<C> {
        let one = BigRational::one();
        let s = &one + b;
        let step1 = self.affine(&one, &s.recip(), z)?;
        let step2 = self.iota(&step1)?;
        let step3 = self.affine(&(s.clone() * s.clone()).recip(), &(b / &s), &step2)?;
        let step4 = self.iota(&step3)?;
        let step5 = self.affine(&one, &-one.clone(), &step4)?;
        Ok(step5.scale(&self.omega.eval_rational(&s)?))
    }

    /// One generator, without re-certification.
    fn act_raw(&self, g: &Generator, z: &SheafElement<C>) -> Result<(C, C)> {
        let p = q(self.ring.p() as i64);
        Ok(match g {
            Generator::W => (z.z2.clone(), z.z1.clone()),
            Generator::Center(a) => {
                if a.is_zero() {
                    return Err(Error::InvalidArgument("center(0)".into()));
                }
                let w = self.omega.eval_rational(a)?;
                (z.z1.scale(&w), z.z2.scale(&w))
            }
            Generator::Diag(a) => {
                self.unit_check(a, "diag(a,1)")?;
                let z1 = z.z1.sigma(a)?.scale(&self.d1.eval_rational(a)?);
                let c = self.omega.eval_rational(a)? * self.d1.eval_rational(&a.recip())?;
                let z2 = z.z2.sigma(&a.recip())?.scale(&c);
                (z1, z2)
            }
            Generator::DiagP => {
                let dp = self.d1.eval_rational(&p)?;
                let z2 = z.z2.psi()?.scale(&(self.omega.eval_rational(&p)? * dp.try_inverse()?));
                let z1 = z.z1.phi()?.scale(&dp).add(&self.iota(&z2.res_units())?);
                (z1, z2)
            }
            Generator::Upper(b) => {
                if !in_pzp(b, self.ring.p()) {
                    return Err(Error::InvalidArgument(format!("upper(b) needs b ∈ pℤₚ, got {b}")));
                }
                let z1 = z.z1.translate(b)?;
                let z2 = self.u_b(b, &z.z2.res_pzp())?.add(&self.iota(&z1.res_units())?);
                (z1, z2)
            }
        })
    }

    /// Apply one generator and re-certify compatibility.
    pub fn act(&self, g: &Generator, z: &SheafElement<C>) -> Result<SheafElement<C>> {
        let (z1, z2) = self.act_raw(g, z)?;
        self.make_element(z1, z2)
    }

    /// Apply the word `g₁·…·g_n` (so `g_n` acts first).
    pub fn act_word(&self, word: &[Generator], z: &SheafElement<C>) -> Result<SheafElement<C>> {
        word.iter().rev().try_fold(z.clone(), |acc, g| self.act(g, &acc))
    }

    /// Defect between two elements (minimum over both components).
    pub fn element_defect(&self, a: &SheafElement<C>, b: &SheafElement<C>) -> Result<Val> {
        Ok(a.z1.defect(&b.z1)?.min(a.z2.defect(&b.z2)?))
    }

    /// `Res_{ℤₚ}(w·diag(p,1)·z)` against `ω(p)ψ(z₂)` (ψ of `Δ`).
    pub fn diag_p_psi_defect(&self, z: &SheafElement<C>) -> Result<Val> {
        let moved = self.act_word(&[Generator::W, Generator::DiagP], z)?;
        let p = q(self.ring.p() as i64);
        let c = self.omega.eval_rational(&p)? * self.d1.eval_rational(&p)?.try_inverse()?;
        moved.z1.defect(&z.z2.psi()?.scale(&c))
    }
}

/// Outcome of one relation check (the JSON relation report).
#[derive(Debug, Clone, Serialize)]
pub struct RelationReport {
    /// `lhs = rhs` as text.
    pub relation: String,
    /// Number of random elements tested.
    pub samples: usize,
    /// Smallest defect valuation seen (`None` when every sample agreed exactly).
    pub min_defect_valuation: Option<i64>,
    /// Whether the minimum clears the threshold.
    pub pass: bool,
}

impl RelationReport {
    fn from_min(relation: String, samples: usize, min: Val, threshold: i64) -> Self {
        RelationReport {
            relation,
            samples,
            min_defect_valuation: match min {
                Val::Inf => None,
                Val::Fin(v) => Some(v),
            },
            pass: min.at_least(threshold),
        }
    }
}

/// A relation `lhs = rhs` between words in the generators.
#[derive(Debug, Clone)]
pub struct Relation {
    /// Left-hand word.
    pub lhs: Vec<Generator>,
    /// Right-hand word.
    pub rhs: Vec<Generator>,
}

impl Relation {
    /// Construct a relation.
    pub fn new(lhs: Vec<Generator>, rhs: Vec<Generator>) -> Self {
        Relation { lhs, rhs }
    }

    /// `lhs = rhs` as text.
    pub fn name(&self) -> String {
        format!("{} = {}", word_to_string(&self.lhs), word_to_string(&self.rhs))
    }
}

/// The relations checked by the fuzzer at the prime `p`:
/// `w² = 1`; the center commuting with every generator; multiplicativity of the
/// diagonal torus (on units, and through `(diag(p,1)w)² = center(p)`); the
/// unipotent group law and its normalization by the torus.
pub fn standard_relations(p: u32) -> Vec<Relation> {
    use Generator::*;
    let pq = q(p as i64);
    let a = q(2);
    let a2 = q(3);
    let c = q(3);
    vec![
        Relation::new(vec![W, W], vec![]),
        Relation::new(vec![Center(c.clone()), W], vec![W, Center(c.clone())]),
        Relation::new(vec![Center(pq.clone()), W], vec![W, Center(pq.clone())]),
        Relation::new(vec![Center(c.clone()), Diag(a.clone())], vec![Diag(a.clone()), Center(c.clone())]),
        Relation::new(vec![Center(c.clone()), DiagP], vec![DiagP, Center(c.clone())]),
        Relation::new(vec![Center(c.clone()), Upper(pq.clone())], vec![Upper(pq.clone()), Center(c.clone())]),
        Relation::new(vec![Diag(a.clone()), Diag(a2.clone())], vec![Diag(&a * &a2)]),
        Relation::new(vec![DiagP, W, DiagP, W], vec![Center(pq.clone())]),
        Relation::new(vec![Upper(pq.clone()), Upper(-pq.clone())], vec![]),
        Relation::new(vec![Upper(pq.clone()), Upper(pq.clone())], vec![Upper(&pq + &pq)]),
        Relation::new(
            vec![Diag(a.clone()), Upper(pq.clone()), Diag(a.recip())],
            vec![Upper(&a * &pq)],
        ),
        Relation::new(vec![DiagP, Upper(pq.clone())], vec![Upper(&pq * &pq), DiagP]),
    ]
}

/// Apply both sides of `lhs = rhs` to `samples` random valid elements drawn by
/// `draw` and return the minimum defect valuation of the difference.
pub fn check_relation<K: Scalar, C: SheafComponent<K>, G: Rng>(
    sheaf: &P1Sheaf<K, C>,
    relation: &Relation,
    samples: usize,
    rng: &mut G,
    draw: impl Fn(&P1Sheaf<K, C>, &mut G) -> Result<SheafElement<C>>,
) -> Result<RelationReport> {
    let mut min = Val::Inf;
    for _ in 0..samples {
        let z = draw(sheaf, rng)?;
        let l = sheaf.act_word(&relation.lhs, &z)?;
        let r = sheaf.act_word(&relation.rhs, &z)?;
        min = min.min(sheaf.element_defect(&l, &r)?);
    }
    Ok(RelationReport::from_min(relation.name(), samples, min, sheaf.threshold()))
}

/// The `Res_{ℤₚ} w·diag(p,1)z = ω(p)ψ(z₂)` bullet on random elements.
pub fn check_diag_p_psi<K: Scalar, C: SheafComponent<K>, G: Rng>(
    sheaf: &P1Sheaf<K, C>,
    samples: usize,
    rng: &mut G,
    draw: impl Fn(&P1Sheaf<K, C>, &mut G) -> Result<SheafElement<C>>,
) -> Result<RelationReport> {
    let mut min = Val::Inf;
    for _ in 0..samples {
        let z = draw(sheaf, rng)?;
        min = min.min(sheaf.diag_p_psi_defect(&z)?);
    }
    Ok(RelationReport::from_min(
        "Res_Zp(w·diag(p,1)·z) = omega(p)·psi(z2)".into(),
        samples,
        min,
        sheaf.threshold(),
    ))
}

/// `{ž, z}_{P¹} = {ž₁, z₁} + {Res_{pℤₚ} ž₂, Res_{pℤₚ} z₂}` with its absolute accuracy.
pub fn p1_pairing<K: Scalar>(
    dual: &SheafElement<JetFn<K>>,
    z: &SheafElement<Dist<K>>,
) -> Result<(CoeffElement<K>, Val)> {
    let (a, acc_a) = dual.z1.pair(&z.z1)?;
    let (b, acc_b) = dual.z2.res_pzp().pair(&z.z2.res_pzp())?;
    Ok((a + b, acc_a.min(acc_b)))
}

/// G-invariance of the P¹-pairing: for `samples` random pairs `(ž, z)` and each
/// generator `g` in `generators`, the relative defect of `{gž, gz}` against `{ž, z}`.
pub fn check_pairing_invariance<K: Scalar, G: Rng>(
    sheaf: &P1Sheaf<K, Dist<K>>,
    dual: &P1Sheaf<K, JetFn<K>>,
    generators: &[Generator],
    samples: usize,
    rng: &mut G,
) -> Result<RelationReport> {
    let mut min = Val::Inf;
    for _ in 0..samples {
        let z = sheaf.random_element(rng)?;
        let zd = dual.random_element(rng)?;
        let (before, acc0) = p1_pairing(&zd, &z)?;
        for g in generators {
            let gz = sheaf.act(g, &z)?;
            let gzd = dual.act(g, &zd)?;
            let (after, acc1) = p1_pairing(&gzd, &gz)?;
            min = min.min(relative_scalar_defect(&before, &after, acc0.min(acc1)));
        }
    }
    let names: Vec<_> = generators.iter().map(|g| g.to_string()).collect();
    Ok(RelationReport::from_min(
        format!("{{g·ž, g·z}} = {{ž, z}} for g in [{}]", names.join(", ")),
        samples,
        min,
        sheaf.threshold(),
    ))
}

/// Agreement of the series `ι` with the closed-form `ι` on plus-part inputs.
pub fn check_involution_consistency<K: Scalar, G: Rng>(
    sheaf: &P1Sheaf<K, Dist<K>>,
    closed: &P1Sheaf<K, Dist<K>>,
    samples: usize,
    rng: &mut G,
) -> Result<RelationReport> {
    let mut min = Val::Inf;
    for _ in 0..samples {
        let f = sheaf.random_dist(rng, 4, Support::Units)?;
        min = min.min(sheaf.iota(&f)?.defect(&closed.iota(&f)?)?);
    }
    Ok(RelationReport::from_min(
        "iota (series) = iota (closed form) on plus parts".into(),
        samples,
        min,
        sheaf.threshold(),
    ))
}

fn relative_scalar_defect<K: Scalar>(a: &CoeffElement<K>, b: &CoeffElement<K>, accuracy: Val) -> Val {
    let d = (a.clone() - b.clone()).val();
    let s = a.val().min(b.val());
    let rel = match (d, s) {
        (Val::Inf, _) => Val::Inf,
        (Val::Fin(d), Val::Fin(s)) => Val::Fin(d - s),
        (Val::Fin(d), Val::Inf) => Val::Fin(d),
    };
    let cap = match (accuracy, s) {
        (Val::Inf, _) => Val::Inf,
        (Val::Fin(x), Val::Fin(s)) => Val::Fin(x - s),
        (Val::Fin(x), Val::Inf) => Val::Fin(x),
    };
    rel.min(cap)
}

/// Every generator used by the fuzzer, for pairing-invariance sweeps.
pub fn sample_generators(p: u32) -> Vec<Generator> {
    let pq = q(p as i64);
    vec![
        Generator::W,
        Generator::Center(q(3)),
        Generator::Diag(q(2)),
        Generator::DiagP,
        Generator::Upper(pq),
    ]
}

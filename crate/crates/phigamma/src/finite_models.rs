//! Finite-dimensional P̄⁺-modules carrying exact cohomology computations.
//!
//! Two families of models are provided, both presented by explicit matrices
//! over a coefficient ring `A`:
//!
//! * [`PolDualModule`]: the dual of polynomials of degree `≤ N`,
//!   `Pol_{≤N}(ℤₚ, A)*(δ₁, δ₂)`, with basis `t⁰, …, t^N` — the finite reduction
//!   of `R⁺(δ₁, δ₂)`;
//! * [`LocPolyModule`]: locally polynomial functions on `ℤₚ ∖ p^h ℤₚ` modulo
//!   degree `> D_work` — a finite quotient module of the locally analytic
//!   model of `R⁻(δ₁, δ₂)`.
//!
//! Both expose the same operator bundle [`ModelOperators`]: `σ_a` for a fixed
//! topological generator `a` of ℤₚ^× (written `γ`), `φ`, `τ`, the Iwasawa
//! corrections `δ_p = 1 + τ + ⋯ + τ^{p−1}` and `δ_a = (τ^a − 1)/(τ − 1)`, and
//! the Lie operators `a⁺`, `u⁻`.  [`Rank2Extension`] glues a trivial line
//! onto a model along a `(φ, γ)`-cocycle.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;

use crate::characters::Character;
use crate::coefficients::{binom_ring, CoeffElement, CoeffRing, Ring, Scalar, Val};
use crate::error::{Error, Result};
use crate::linalg::{realify, realify_vec, Matrix};

/// Matrices over a coefficient ring.
pub type AMatrix<K> = Matrix<CoeffElement<K>>;

/// Guard digits subtracted from the working precision when deciding that an
/// identity holds on the p-adic path.
pub const GUARD_DIGITS: i64 = 2;

/// The smallest positive integer generating ℤₚ^× topologically
/// (a primitive root modulo `p²`).
pub fn topological_generator(p: u32) -> i64 {
    let p = p as i64;
    let p2 = p * p;
    let order_mod = |a: i64, m: i64| {
        let mut x = a % m;
        let mut k = 1;
        while x != 1 {
            x = x * a % m;
            k += 1;
        }
        k
    };
    (2..p2)
        .find(|&a| a % p != 0 && order_mod(a, p2) == p * (p - 1))
        .expect("a primitive root modulo p² exists for odd p")
}

/// Smallest valuation that counts as "zero" for identity checks over `ring`.
pub fn identity_threshold<K: Scalar>(ring: &CoeffRing<K>) -> i64 {
    ring.precision() as i64 - GUARD_DIGITS
}

/// Valuation of `a − b` (+∞ when equal exactly).
pub fn matrix_defect<K: Scalar>(a: &AMatrix<K>, b: &AMatrix<K>) -> Result<Val> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let p = a.zero_entry().ring().p();
    Ok(a.sub(b).min_valuation(p))
}

/// The generator matrices of a finite model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelOperators<K: Scalar> {
    /// The topological generator `a` of ℤₚ^× represented by `gamma`.
    pub generator: i64,
    /// `γ = σ_a`.
    pub gamma: AMatrix<K>,
    /// Frobenius `φ`.
    pub phi: AMatrix<K>,
    /// `τ = (1 0; p 1)`.
    pub tau: AMatrix<K>,
    /// `δ_p = 1 + τ + ⋯ + τ^{p−1}`.
    pub delta_p: AMatrix<K>,
    /// `δ_a = Σ_{n≥1} binom(a, n)(τ − 1)^{n−1}`.
    pub delta_a: AMatrix<K>,
    /// The Lie operator `a⁺`.
    pub a_plus: AMatrix<K>,
    /// The Lie operator `u⁻`.
    pub u_minus: AMatrix<K>,
}

/// Outcome of one matrix identity check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RelationCheck {
    /// Name of the identity.
    pub name: String,
    /// Valuation of `lhs − rhs`.
    pub defect: Val,
    /// Whether the defect clears the threshold.
    pub pass: bool,
}

/// Serializable dump of a model's matrices.
#[derive(Debug, Clone, Serialize)]
pub struct ModuleDump {
    /// Model family.
    pub kind: String,
    /// The prime.
    pub p: u32,
    /// Rank over the coefficient ring.
    pub dim: usize,
    /// The generator `a` with `γ = σ_a`.
    pub generator: i64,
    /// Matrices by operator name, rendered entrywise.
    pub matrices: BTreeMap<String, Vec<Vec<String>>>,
}

impl<K: Scalar> ModelOperators<K> {
    /// Rank of the underlying free module.
    pub fn dim(&self) -> usize {
        self.phi.rows()
    }

    /// The coefficient ring.
    pub fn ring(&self) -> &Arc<CoeffRing<K>> {
        self.phi.zero_entry().ring()
    }

    /// The identity matrix of the model.
    pub fn identity(&self) -> AMatrix<K> {
        Matrix::identity_like(self.dim(), self.phi.zero_entry())
    }

    /// `log τ = Σ_{k ≥ 1} (−1)^{k+1}(τ − 1)^k / k`, finite by nilpotence.
    pub fn log_tau(&self) -> Result<AMatrix<K>> {
        let n = self.dim();
        let one = self.identity();
        let x = self.tau.sub(&one);
        certify_nilpotent(&x, "τ − 1")?;
        let ring = Arc::clone(self.ring());
        let mut acc = Matrix::filled(n, n, ring.zero());
        let mut power = one;
        for k in 1..=n as i64 {
            power = power.mul(&x);
            let c = ring.rational(&crate::coefficients::rat(if k % 2 == 1 { 1 } else { -1 }, k));
            acc = acc.add(&power.scale(&c));
        }
        Ok(acc)
    }

    /// Run the structural identities a model must satisfy.
    ///
    /// `φγ = γφ`, `(γδ_a − 1)(τ − 1) = (τ − 1)(γ − 1)`,
    /// `(φδ_p − 1)(τ − 1) = (τ − 1)(φ − 1)`, `[a⁺, u⁻] = −u⁻`, `pφu⁻ = u⁻φ`,
    /// `exp(log τ) = τ`, and `log τ = ±p·u⁻` (`sign` selects the convention of
    /// the model).
    pub fn relation_checks(&self, log_sign: i64) -> Result<Vec<RelationCheck>> {
        let ring = Arc::clone(self.ring());
        let threshold = identity_threshold(&ring);
        let one = self.identity();
        let tm1 = self.tau.sub(&one);
        let p_elem = ring.int(ring.p() as i64);
        let mut out = Vec::new();
        let mut push = |name: &str, lhs: AMatrix<K>, rhs: AMatrix<K>| -> Result<()> {
            let defect = matrix_defect(&lhs, &rhs)?;
            out.push(RelationCheck {
                name: name.to_string(),
                defect,
                pass: defect.at_least(threshold),
            });
            Ok(())
        };
        push("phi gamma = gamma phi", self.phi.mul(&self.gamma), self.gamma.mul(&self.phi))?;
        push(
            "(gamma delta_a - 1)(tau - 1) = (tau - 1)(gamma - 1)",
            self.gamma.mul(&self.delta_a).sub(&one).mul(&tm1),
            tm1.mul(&self.gamma.sub(&one)),
        )?;
        push(
            "(phi delta_p - 1)(tau - 1) = (tau - 1)(phi - 1)",
            self.phi.mul(&self.delta_p).sub(&one).mul(&tm1),
            tm1.mul(&self.phi.sub(&one)),
        )?;
        push(
            "[a+, u-] = -u-",
            self.a_plus.mul(&self.u_minus).sub(&self.u_minus.mul(&self.a_plus)),
            self.u_minus.neg(),
        )?;
        push(
            "p phi u- = u- phi",
            self.phi.mul(&self.u_minus).scale(&p_elem),
            self.u_minus.mul(&self.phi),
        )?;
        let log = self.log_tau()?;
        push("exp(log tau) = tau", matrix_exp(&log)?, self.tau.clone())?;
        push(
            "log tau = p u-",
            log,
            self.u_minus.scale(&ring.int(log_sign * ring.p() as i64)),
        )?;
        Ok(out)
    }

    /// Fail with [`Error::IdentityFailure`] unless every relation holds.
    pub fn certify(&self, log_sign: i64) -> Result<()> {
        for c in self.relation_checks(log_sign)? {
            if !c.pass {
                return Err(Error::IdentityFailure(format!("{} (defect {})", c.name, c.defect)));
            }
        }
        Ok(())
    }

    /// JSON dump of every operator.
    pub fn dump(&self, kind: &str, render: impl Fn(&CoeffElement<K>) -> String) -> ModuleDump {
        let mut matrices = BTreeMap::new();
        let named = [
            ("gamma", &self.gamma),
            ("phi", &self.phi),
            ("tau", &self.tau),
            ("delta_p", &self.delta_p),
            ("delta_a", &self.delta_a),
            ("a_plus", &self.a_plus),
            ("u_minus", &self.u_minus),
        ];
        for (name, m) in named {
            let rows = (0..m.rows()).map(|i| m.row(i).iter().map(&render).collect()).collect();
            matrices.insert(name.to_string(), rows);
        }
        ModuleDump {
            kind: kind.to_string(),
            p: self.ring().p(),
            dim: self.dim(),
            generator: self.generator,
            matrices,
        }
    }
}

/// Check that `x^{dim} = 0` (to the identity threshold on the p-adic path).
fn certify_nilpotent<K: Scalar>(x: &AMatrix<K>, what: &str) -> Result<()> {
    let ring = x.zero_entry().ring();
    let v = x.pow(x.rows() as u32).min_valuation(ring.p());
    if v.at_least(identity_threshold(ring)) {
        Ok(())
    } else {
        Err(Error::NonConvergence(format!(
            "{what} is not nilpotent within {} steps (defect {v})",
            x.rows()
        )))
    }
}

/// `exp(x) = Σ x^k / k!` for a nilpotent matrix `x`.
pub fn matrix_exp<K: Scalar>(x: &AMatrix<K>) -> Result<AMatrix<K>> {
    certify_nilpotent(x, "exponent")?;
    let n = x.rows();
    let ring = Arc::clone(x.zero_entry().ring());
    let mut acc = Matrix::identity_like(n, &ring.zero());
    let mut term = acc.clone();
    for k in 1..=n as i64 {
        term = term.mul(x).scale(&ring.rational(&crate::coefficients::rat(1, k)));
        acc = acc.add(&term);
    }
    Ok(acc)
}

/// `δ_p` and `δ_a` from `τ`.
fn iwasawa_corrections<K: Scalar>(tau: &AMatrix<K>, p: u32, a: i64) -> Result<(AMatrix<K>, AMatrix<K>)> {
    let n = tau.rows();
    let ring = Arc::clone(tau.zero_entry().ring());
    let one = Matrix::identity_like(n, &ring.zero());
    let mut delta_p = Matrix::filled(n, n, ring.zero());
    let mut power = one.clone();
    for _ in 0..p {
        delta_p = delta_p.add(&power);
        power = power.mul(tau);
    }
    let x = tau.sub(&one);
    certify_nilpotent(&x, "τ − 1")?;
    let a_elem = ring.int(a);
    let mut delta_a = Matrix::filled(n, n, ring.zero());
    let mut power = one;
    for k in 1..=n.max(1) {
        delta_a = delta_a.add(&power.scale(&binom_ring(&a_elem, k)));
        power = power.mul(&x);
    }
    Ok((delta_p, delta_a))
}

/// `Pol_{≤N}(ℤₚ, A)*(δ₁, δ₂)` with basis `t⁰, …, t^N`.
///
/// With `δ = δ₁δ₂⁻¹` of weight `w` and `κ = −w − 1`:
/// `σ_a(t^j) = δ(a) a^j t^j`, `φ(t^j) = δ(p) p^j t^j`,
/// `τ(t^j) = Σ_{h ≤ j} binom(κ − h, j − h) p^{j−h} t^h`,
/// `a⁺(t^j) = (w + j) t^j` and `u⁻ = log(τ)/p`, i.e. `u⁻(t^j) = −(w + j) t^{j−1}`.
///
/// In the rescaled basis `f_j = j!·t^j` the latter reads
/// `u⁻(f_j) = j(−w − j) f_{j−1}`; the `τ` formula above is the one in the basis
/// `t^j`, and `u⁻` is taken in the same basis so that `τ = exp(p·u⁻)` holds.
#[derive(Debug, Clone, PartialEq)]
pub struct PolDualModule<K: Scalar> {
    degree: usize,
    d1: Character<K>,
    d2: Character<K>,
    delta: Character<K>,
    kappa: CoeffElement<K>,
    ops: ModelOperators<K>,
}

impl<K: Scalar> PolDualModule<K> {
    /// Build the model of degree bound `N` and certify its relations.
    pub fn new(degree: usize, d1: &Character<K>, d2: &Character<K>) -> Result<Self> {
        let delta = d1.div(d2);
        let ring = Arc::clone(delta.ring());
        let p = ring.p();
        let a = topological_generator(p);
        let n = degree + 1;
        let zero = ring.zero();
        let w = delta.weight().clone();
        let kappa = -w.clone() - ring.one();
        let delta_a_val = delta.eval_int(a)?;
        let delta_p_val = delta.value_at_p().clone();
        let a_elem = ring.int(a);
        let p_elem = ring.int(p as i64);

        let mut gamma = Matrix::filled(n, n, zero.clone());
        let mut phi = Matrix::filled(n, n, zero.clone());
        let mut tau = Matrix::filled(n, n, zero.clone());
        let mut a_plus = Matrix::filled(n, n, zero.clone());
        let mut u_minus = Matrix::filled(n, n, zero.clone());
        for j in 0..n {
            gamma.set(j, j, delta_a_val.clone() * a_elem.pow_u(j as u64));
            phi.set(j, j, delta_p_val.clone() * p_elem.pow_u(j as u64));
            for h in 0..=j {
                let b = binom_ring(&(kappa.clone() - ring.int(h as i64)), j - h);
                tau.set(h, j, b * p_elem.pow_u((j - h) as u64));
            }
            a_plus.set(j, j, w.clone() + ring.int(j as i64));
            if j > 0 {
                u_minus.set(j - 1, j, -w.clone() - ring.int(j as i64));
            }
        }
        let (delta_p, delta_a) = iwasawa_corrections(&tau, p, a)?;
        let ops = ModelOperators {
            generator: a,
            gamma,
            phi,
            tau,
            delta_p,
            delta_a,
            a_plus,
            u_minus,
        };
        ops.certify(1)?;
        Ok(PolDualModule {
            degree,
            d1: d1.clone(),
            d2: d2.clone(),
            delta,
            kappa,
            ops,
        })
    }

    /// The degree bound `N`.
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Rank `N + 1`.
    pub fn dim(&self) -> usize {
        self.degree + 1
    }

    /// The characters `(δ₁, δ₂)`.
    pub fn characters(&self) -> (&Character<K>, &Character<K>) {
        (&self.d1, &self.d2)
    }

    /// `δ₁δ₂⁻¹`.
    pub fn delta(&self) -> &Character<K> {
        &self.delta
    }

    /// `κ = −κ(δ₁δ₂⁻¹) − 1`.
    pub fn kappa(&self) -> &CoeffElement<K> {
        &self.kappa
    }

    /// The operator bundle.
    pub fn operators(&self) -> &ModelOperators<K> {
        &self.ops
    }

    /// The matrix of `σ_b` for an integer unit `b`.
    pub fn sigma(&self, b: i64) -> Result<AMatrix<K>> {
        let ring = self.delta.ring();
        let db = self.delta.eval_int(b)?;
        let diag: Vec<_> = (0..self.dim()).map(|j| db.clone() * ring.int(b).pow_u(j as u64)).collect();
        Ok(Matrix::diagonal(&diag, &ring.zero()))
    }

    /// The Lie operators `(a⁺, u⁻)` in the basis `t^j`.
    pub fn lie_matrices(&self) -> (&AMatrix<K>, &AMatrix<K>) {
        (&self.ops.a_plus, &self.ops.u_minus)
    }

    /// `(a⁺, u⁻)` in the rescaled basis `f_j = j!·t^j`, where
    /// `u⁻(f_j) = j(−w − j) f_{j−1}`.
    pub fn lie_matrices_factorial_basis(&self) -> (AMatrix<K>, AMatrix<K>) {
        let ring = self.delta.ring();
        let n = self.dim();
        let mut fact = ring.one();
        let mut d = Vec::with_capacity(n);
        let mut d_inv = Vec::with_capacity(n);
        for j in 0..n {
            if j > 0 {
                fact = fact.mul_int(j as i64);
            }
            d.push(fact.clone());
            d_inv.push(fact.try_inverse().expect("factorials are invertible in characteristic 0"));
        }
        // Coordinates w.r.t. f_j are (t^j-coordinates)/j!.
        let to_f = Matrix::diagonal(&d_inv, &ring.zero());
        let from_f = Matrix::diagonal(&d, &ring.zero());
        (
            to_f.mul(&self.ops.a_plus).mul(&from_f),
            to_f.mul(&self.ops.u_minus).mul(&from_f),
        )
    }
}

/// Locally polynomial functions on `ℤₚ ∖ p^h ℤₚ` modulo degree `> D_work`.
///
/// The classes are `p^m(u + pℤₚ)` for `0 ≤ m < h`, `1 ≤ u < p`; on each class
/// a function is a polynomial in the global coordinate `x`.  With
/// `δ = δ₁δ₂⁻¹` of weight `κ`:
///
/// * `((a 0; b 1)·f)(x) = δ(a − bx) f(x/(a − bx))` (for `σ_a` and `τ`),
/// * `(φf)(x) = δ(p) f(x/p)` on `pℤₚ` (zero on the units),
/// * `(a⁺f)(x) = κ f(x) − x f′(x)`, `(u⁻f)(x) = κ x f(x) − x² f′(x)`.
///
/// Functions supported on `p^h ℤₚ` and monomials of degree `> D_work` span a
/// sub-module, so the model is an honest quotient; the loss flags record
/// whether an operator produced components that the quotient discards.
#[derive(Debug, Clone, PartialEq)]
pub struct LocPolyModule<K: Scalar> {
    level: u32,
    degree: usize,
    work_degree: usize,
    delta: Character<K>,
    kappa: CoeffElement<K>,
    ops: ModelOperators<K>,
    loss: BTreeMap<String, bool>,
}

impl<K: Scalar> LocPolyModule<K> {
    /// Build at level `h ≥ 1`, nominal degree `D` and `headroom` extra degrees.
    pub fn new(level: u32, degree: usize, headroom: usize, d1: &Character<K>, d2: &Character<K>) -> Result<Self> {
        if level == 0 {
            return Err(Error::InvalidArgument("level must be at least 1".into()));
        }
        let delta = d1.div(d2);
        let ring = Arc::clone(delta.ring());
        let p = ring.p();
        let a = topological_generator(p);
        let work_degree = degree + headroom;
        let per = work_degree + 1;
        let classes = level as usize * (p as usize - 1);
        let n = classes * per;
        let index = |m: usize, u: i64, k: usize| (m * (p as usize - 1) + (u as usize - 1)) * per + k;
        let zero = ring.zero();
        let kappa = delta.weight().clone();
        let delta_a_val = delta.eval_int(a)?;
        let delta_p_val = delta.value_at_p().clone();
        let a_inv = ring.rational(&crate::coefficients::rat(1, a));
        let p_inv = ring.rational(&crate::coefficients::rat(1, p as i64));
        let p_elem = ring.int(p as i64);

        let mut gamma = Matrix::filled(n, n, zero.clone());
        let mut phi = Matrix::filled(n, n, zero.clone());
        let mut tau = Matrix::filled(n, n, zero.clone());
        let mut a_plus = Matrix::filled(n, n, zero.clone());
        let mut u_minus = Matrix::filled(n, n, zero.clone());
        let mut tau_loss = false;
        let mut u_loss = false;
        for m in 0..level as usize {
            for u in 1..p as i64 {
                // σ_a: x^k 1_{(m,u)} ↦ δ(a) a^{−k} x^k 1_{(m, ua)}.
                let ua = (u * a).rem_euclid(p as i64);
                for k in 0..per {
                    let col = index(m, u, k);
                    gamma.set(index(m, ua, k), col, delta_a_val.clone() * a_inv.pow_u(k as u64));
                    if m + 1 < level as usize {
                        phi.set(index(m + 1, u, k), col, delta_p_val.clone() * p_inv.pow_u(k as u64));
                    }
                    // τ: x^k ↦ x^k (1 − px)^{κ − k}.
                    let e = kappa.clone() - ring.int(k as i64);
                    for r in 0.. {
                        let c = binom_ring(&e, r) * (-p_elem.clone()).pow_u(r as u64);
                        if k + r >= per {
                            if !c.is_zero_elem() {
                                tau_loss = true;
                            }
                            break;
                        }
                        tau.set(index(m, u, k + r), col, c);
                    }
                    a_plus.set(col, col, e.clone());
                    if k + 1 < per {
                        u_minus.set(index(m, u, k + 1), col, e);
                    } else if !e.is_zero_elem() {
                        u_loss = true;
                    }
                }
            }
        }
        let (delta_p, delta_a) = iwasawa_corrections(&tau, p, a)?;
        let ops = ModelOperators {
            generator: a,
            gamma,
            phi,
            tau,
            delta_p,
            delta_a,
            a_plus,
            u_minus,
        };
        ops.certify(-1)?;
        let mut loss = BTreeMap::new();
        loss.insert("tau".to_string(), tau_loss);
        loss.insert("u_minus".to_string(), u_loss);
        loss.insert("phi".to_string(), false);
        Ok(LocPolyModule {
            level,
            degree,
            work_degree,
            delta,
            kappa,
            ops,
            loss,
        })
    }

    /// The level `h`.
    pub fn level(&self) -> u32 {
        self.level
    }

    /// Nominal degree `D`.
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Working degree `D + headroom`.
    pub fn work_degree(&self) -> usize {
        self.work_degree
    }

    /// Rank over the coefficient ring.
    pub fn dim(&self) -> usize {
        self.ops.dim()
    }

    /// `δ₁δ₂⁻¹`.
    pub fn delta(&self) -> &Character<K> {
        &self.delta
    }

    /// The weight `κ(δ)` entering `a⁺` and `u⁻`.
    pub fn kappa(&self) -> &CoeffElement<K> {
        &self.kappa
    }

    /// The operator bundle.
    pub fn operators(&self) -> &ModelOperators<K> {
        &self.ops
    }

    /// Truncation-loss flags per operator.
    pub fn loss_flags(&self) -> &BTreeMap<String, bool> {
        &self.loss
    }

    /// Coordinates of the function `Σ_k c_k x^k` on the class `p^m(u + pℤₚ)`.
    pub fn class_vector(&self, m: u32, u: i64, coeffs: &[CoeffElement<K>]) -> Result<Vec<CoeffElement<K>>> {
        let p = self.delta.p() as i64;
        if m >= self.level || u.rem_euclid(p) == 0 || coeffs.len() > self.work_degree + 1 {
            return Err(Error::InvalidArgument("class or degree outside the model".into()));
        }
        let ring = self.delta.ring();
        let mut v = vec![ring.zero(); self.dim()];
        let per = self.work_degree + 1;
        let base = (m as usize * (p as usize - 1) + (u.rem_euclid(p) as usize - 1)) * per;
        for (k, c) in coeffs.iter().enumerate() {
            v[base + k] = c.clone();
        }
        Ok(v)
    }

    /// Coordinates of `x ↦ Σ_k c_k x^k` restricted to every class of the model.
    pub fn global_vector(&self, coeffs: &[CoeffElement<K>]) -> Result<Vec<CoeffElement<K>>> {
        let p = self.delta.p() as i64;
        let mut v = vec![self.delta.ring().zero(); self.dim()];
        for m in 0..self.level {
            for u in 1..p {
                let w = self.class_vector(m, u, coeffs)?;
                for (acc, x) in v.iter_mut().zip(w) {
                    *acc = acc.clone() + x;
                }
            }
        }
        Ok(v)
    }
}

/// A rank-one extension `Δ̃ = M ⊕ A·e` with `φ(e) = e + c(φ)`, `γ(e) = e + c(γ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rank2Extension<K: Scalar> {
    base_phi: AMatrix<K>,
    base_gamma: AMatrix<K>,
    c_phi: Vec<CoeffElement<K>>,
    c_gamma: Vec<CoeffElement<K>>,
    phi: AMatrix<K>,
    gamma: AMatrix<K>,
}

/// Glue a line onto a model along the `(φ, γ)`-cochain `(c_φ, c_γ)`.
///
/// Fails with [`Error::IdentityFailure`] unless `(φ − 1)c_γ = (γ − 1)c_φ`,
/// which is exactly the condition for the block matrices to commute.
pub fn build_extension<K: Scalar>(
    base: &ModelOperators<K>,
    c_phi: &[CoeffElement<K>],
    c_gamma: &[CoeffElement<K>],
) -> Result<Rank2Extension<K>> {
    let n = base.dim();
    if c_phi.len() != n || c_gamma.len() != n {
        return Err(Error::DimensionMismatch("cocycle length".into()));
    }
    let ring = Arc::clone(base.ring());
    let one = base.identity();
    let lhs = base.phi.sub(&one).apply(c_gamma);
    let rhs = base.gamma.sub(&one).apply(c_phi);
    let threshold = identity_threshold(&ring);
    let defect = lhs
        .iter()
        .zip(&rhs)
        .map(|(a, b)| (a.clone() - b.clone()).val())
        .min()
        .unwrap_or(Val::Inf);
    if !defect.at_least(threshold) {
        return Err(Error::IdentityFailure(format!("cocycle condition (defect {defect})")));
    }
    let glue = |m: &AMatrix<K>, c: &[CoeffElement<K>]| {
        let mut out = Matrix::filled(n + 1, n + 1, ring.zero());
        for i in 0..n {
            for j in 0..n {
                out.set(i, j, m.get(i, j).clone());
            }
            out.set(i, n, c[i].clone());
        }
        out.set(n, n, ring.one());
        out
    };
    let phi = glue(&base.phi, c_phi);
    let gamma = glue(&base.gamma, c_gamma);
    let comm = matrix_defect(&phi.mul(&gamma), &gamma.mul(&phi))?;
    if !comm.at_least(threshold) {
        return Err(Error::IdentityFailure(format!("extension generators do not commute (defect {comm})")));
    }
    Ok(Rank2Extension {
        base_phi: base.phi.clone(),
        base_gamma: base.gamma.clone(),
        c_phi: c_phi.to_vec(),
        c_gamma: c_gamma.to_vec(),
        phi,
        gamma,
    })
}

impl<K: Scalar> Rank2Extension<K> {
    /// Block matrix of `φ` on `M ⊕ A·e` (last coordinate is `e`).
    pub fn phi(&self) -> &AMatrix<K> {
        &self.phi
    }

    /// Block matrix of `γ` on `M ⊕ A·e`.
    pub fn gamma(&self) -> &AMatrix<K> {
        &self.gamma
    }

    /// The gluing cochain `(c_φ, c_γ)`.
    pub fn cocycle(&self) -> (&[CoeffElement<K>], &[CoeffElement<K>]) {
        (&self.c_phi, &self.c_gamma)
    }

    /// Whether the extension splits: some `e − d` is fixed by both `φ` and `γ`.
    ///
    /// Decided on the extension's own block matrices: the joint fixed space of
    /// `(φ, γ)` on `M ⊕ A·e` is computed, and the extension splits iff some
    /// fixed vector has a unit `e`-coordinate.
    pub fn is_split(&self) -> Result<bool> {
        let ring = Arc::clone(self.phi.zero_entry().ring());
        let n1 = self.phi.rows();
        let one = Matrix::identity_like(n1, &ring.zero());
        let stacked = Matrix::vstack(&[&self.phi.sub(&one), &self.gamma.sub(&one)]);
        let kernel = realify(&stacked).kernel(ring.p())?;
        let d = ring.dim();
        let threshold = identity_threshold(&ring);
        Ok(kernel
            .iter()
            .any(|v| !v[(n1 - 1) * d].valuation(ring.p()).at_least(threshold)))
    }

    /// A `d ∈ M` with `c = (g − 1)d` for `g ∈ {φ, γ}`, if one exists.
    ///
    /// This is the coboundary test on the base module, independent of
    /// [`Rank2Extension::is_split`].
    pub fn coboundary_witness(&self) -> Result<Option<Vec<CoeffElement<K>>>> {
        coboundary_witness(&self.base_phi, &self.base_gamma, &self.c_phi, &self.c_gamma)
    }
}

/// Solve `(φ − 1)d = c_φ`, `(γ − 1)d = c_γ` on the base module.
pub fn coboundary_witness<K: Scalar>(
    phi: &AMatrix<K>,
    gamma: &AMatrix<K>,
    c_phi: &[CoeffElement<K>],
    c_gamma: &[CoeffElement<K>],
) -> Result<Option<Vec<CoeffElement<K>>>> {
    let ring = Arc::clone(phi.zero_entry().ring());
    let one = Matrix::identity_like(phi.rows(), &ring.zero());
    let stacked = Matrix::vstack(&[&phi.sub(&one), &gamma.sub(&one)]);
    let mut rhs = c_phi.to_vec();
    rhs.extend_from_slice(c_gamma);
    match realify(&stacked).solve(&realify_vec(&rhs), ring.p())? {
        None => Ok(None),
        Some(x) => Ok(Some(crate::linalg::unrealify_vec(&x, &ring)?)),
    }
}

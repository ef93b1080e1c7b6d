//! The functional-analysis dictionary between series, distributions and functions.
//!
//! * The Amice transform identifies distributions on ℤₚ (given by their
//!   binomial moments `m_n = ∫ binom(x, n) μ`) with power series `Σ m_n Tⁿ`.
//! * The Colmez transform sends a series `f` to the locally analytic function
//!   `φ_f(x) = res₀((1+T)^{−x} f dT/(1+T))`; it kills `R⁺` and identifies the
//!   negative part with locally analytic functions (up to the twist by χ⁻¹,
//!   carried here as a tag).
//! * The residue pairing `res₀(σ_{−1}(𝒜_μ) f dT/(1+T))` equals `∫ φ_f μ`.
//! * ψ on functions is `ψ(φ)(x) = φ(px)` and matches ψ on series.
//!
//! Locally analytic functions are modelled by [`LocPolyFn`]: functions that are
//! polynomial of bounded degree on every ball `i + p^hℤₚ`, stored as polynomials
//! in the *global* variable `x` (so that `x·`, `d/dx` and substitutions act
//! directly on the stored data).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::coefficients::{binom_rational, rational_mod_pk, Ring};
use crate::error::{Error, Result};
use crate::poly::{binomial_poly, Poly};
use crate::robba::{CycloFrac, ExpPoly, RobbaElement, Window};

/// A distribution on ℤₚ, recorded by its first binomial moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution<R> {
    moments: Vec<R>,
    truncated: bool,
}

/// JSON view of a [`Distribution`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistributionJson {
    /// Rendered moments `m_0, …, m_N`.
    pub moments: Vec<String>,
    /// Whether moments beyond `m_N` are unknown (rather than zero).
    pub truncated: bool,
}

impl<R: Ring> Distribution<R> {
    /// A distribution with the given moments; `truncated` records whether the
    /// later moments are unknown (`true`) or vanish (`false`).
    pub fn new(moments: Vec<R>, truncated: bool) -> Result<Self> {
        if moments.is_empty() {
            return Err(Error::InvalidArgument("a distribution needs at least one moment".into()));
        }
        Ok(Distribution { moments, truncated })
    }

    /// The Dirac mass at `b ∈ ℤ_(p)`, with moments `binom(b, n)` for `n ≤ n_max`.
    ///
    /// For `b` a non-negative integer the moments vanish beyond `b`, so the
    /// distribution is exact once `n_max ≥ b`.
    pub fn dirac(b: &BigRational, n_max: usize, template: &R) -> Self {
        let moments = (0..=n_max)
            .map(|n| template.from_rational_like(&binom_rational(b, n)))
            .collect();
        let finite = b.is_integer() && b >= &BigRational::zero() && b.to_integer() <= BigInt::from(n_max);
        Distribution { moments, truncated: !finite }
    }

    /// The distribution whose Amice transform is the exact element `f`.
    pub fn from_exppoly(f: &ExpPoly<R>, n_max: usize) -> Self {
        Distribution {
            moments: f.moments(n_max),
            truncated: true,
        }
    }

    /// Moments `m_0, …, m_N`.
    pub fn moments(&self) -> &[R] {
        &self.moments
    }

    /// Whether later moments are unknown.
    pub fn is_truncated(&self) -> bool {
        self.truncated
    }

    /// `x·μ`: since `x binom(x, n) = n binom(x, n) + (n+1) binom(x, n+1)`,
    /// `m′_n = n m_n + (n+1) m_{n+1}` (one moment is lost when truncated).
    pub fn mul_x(&self) -> Self {
        let z = self.moments[0].zero_like();
        let len = self.moments.len();
        let keep = if self.truncated { len.saturating_sub(1).max(1) } else { len };
        let moments = (0..keep)
            .map(|n| {
                let next = self.moments.get(n + 1).cloned().unwrap_or_else(|| z.clone());
                self.moments[n].mul_int(n as i64) + next.mul_int(n as i64 + 1)
            })
            .collect();
        Distribution {
            moments,
            truncated: self.truncated,
        }
    }

    /// Amice transform `𝒜_μ = Σ m_n Tⁿ`.
    pub fn amice(&self, p: u32, cap: Window) -> Result<RobbaElement<R>> {
        let z = self.moments[0].zero_like();
        let n = (cap.hi + 1) as usize;
        if self.truncated {
            let coeffs = self.moments.iter().take(n).cloned().collect();
            RobbaElement::power_series_prefix(p, cap, coeffs, &z)
        } else {
            if self.moments.iter().skip(n).any(|m| !m.is_zero_elem()) {
                return Err(Error::WindowOverflow {
                    op: "amice",
                    detail: format!("{} moments do not fit below T^{}", self.moments.len(), cap.hi),
                });
            }
            let coeffs = self.moments.iter().take(n).cloned().collect();
            RobbaElement::from_coeffs(p, cap, 0, coeffs, &z)
        }
    }

    /// Inverse Amice transform of a power series.
    pub fn amice_inverse(f: &RobbaElement<R>) -> Result<Self> {
        if !f.is_plus() {
            return Err(Error::InvalidArgument(
                "the inverse Amice transform needs a series without negative powers".into(),
            ));
        }
        let (_, hi) = f.known_range();
        let moments = (0..=hi.max(0)).map(|n| f.coeff_checked(n, "amice_inverse")).collect::<Result<Vec<_>>>()?;
        Ok(Distribution {
            moments,
            truncated: f.tail_high(),
        })
    }

    /// `∫ P(x) μ` for a polynomial `P`, through its binomial expansion.
    pub fn integrate_poly(&self, poly: &Poly<R>) -> Result<R> {
        let z = self.moments[0].zero_like();
        let coeffs = binomial_coefficients(poly);
        let mut acc = z.clone();
        for (n, c) in coeffs.iter().enumerate() {
            if c.is_zero_elem() {
                continue;
            }
            let m = match self.moments.get(n) {
                Some(m) => m.clone(),
                None if !self.truncated => z.clone(),
                None => {
                    return Err(Error::WindowOverflow {
                        op: "integrate",
                        detail: format!("moment {n} is not known"),
                    })
                }
            };
            acc = acc + c.clone() * m;
        }
        Ok(acc)
    }

    /// `∫ φ μ` for a level-0 (globally polynomial) function.
    pub fn integrate(&self, phi: &LocPolyFn<R>) -> Result<R> {
        if phi.level != 0 {
            return Err(Error::InvalidArgument(
                "moments only integrate globally polynomial functions; refine the distribution instead".into(),
            ));
        }
        self.integrate_poly(&phi.polys[0])
    }

    /// JSON view.
    pub fn to_json(&self, render: impl Fn(&R) -> String) -> DistributionJson {
        DistributionJson {
            moments: self.moments.iter().map(render).collect(),
            truncated: self.truncated,
        }
    }
}

/// Coefficients `c_n` with `P(x) = Σ c_n binom(x, n)` (Newton forward differences at 0).
pub fn binomial_coefficients<R: Ring>(poly: &Poly<R>) -> Vec<R> {
    let z = poly.zero_elem().clone();
    let d = match poly.degree() {
        None => return vec![],
        Some(d) => d,
    };
    let mut vals: Vec<R> = (0..=d).map(|t| poly.eval(&z.from_int_like(t as i64))).collect();
    let mut out = Vec::with_capacity(d + 1);
    for _ in 0..=d {
        out.push(vals[0].clone());
        vals = vals.windows(2).map(|w| w[1].clone() - w[0].clone()).collect();
    }
    out
}

/// Newton interpolation: the polynomial in `t` with the given values at `t = 0, 1, …`.
fn newton_interpolate<R: Ring>(values: &[R], template: &R) -> Poly<R> {
    let mut diffs = values.to_vec();
    let mut acc = Poly::zero(template);
    for j in 0..values.len() {
        acc = acc.add(&binomial_poly(j, template).scale(&diffs[0]));
        diffs = diffs.windows(2).map(|w| w[1].clone() - w[0].clone()).collect();
    }
    acc
}

/// A locally polynomial function on ℤₚ: polynomial of degree ≤ `degree` on
/// every ball `i + p^h ℤₚ`, stored per class in the global variable `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocPolyFn<R> {
    p: u32,
    level: u32,
    degree: usize,
    polys: Vec<Poly<R>>,
    chi_inverse_twist: bool,
}

/// JSON view of a [`LocPolyFn`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocPolyJson {
    /// Level `h`.
    pub level: u32,
    /// Degree bound `D`.
    pub degree: usize,
    /// Per class `i mod p^h`, the coefficients of the polynomial in `x`.
    pub classes: Vec<Vec<String>>,
    /// Whether the function carries the χ⁻¹ twist of the Colmez transform.
    pub chi_inverse_twist: bool,
}

impl<R: Ring> LocPolyFn<R> {
    /// From per-class polynomials (`polys.len() = p^level`).
    pub fn from_classes(p: u32, level: u32, degree: usize, polys: Vec<Poly<R>>) -> Result<Self> {
        let expected = (p as usize).pow(level);
        if polys.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "{} class polynomials for level {level} (expected {expected})",
                polys.len()
            )));
        }
        if let Some(bad) = polys.iter().find(|q| q.degree().is_some_and(|d| d > degree)) {
            return Err(Error::InvalidArgument(format!(
                "class polynomial of degree {:?} exceeds the bound {degree}",
                bad.degree()
            )));
        }
        Ok(LocPolyFn {
            p,
            level,
            degree,
            polys,
            chi_inverse_twist: false,
        })
    }

    /// A global polynomial (level 0).
    pub fn from_poly(p: u32, degree: usize, poly: Poly<R>) -> Result<Self> {
        Self::from_classes(p, 0, degree, vec![poly])
    }

    /// The constant function `c`.
    pub fn constant(p: u32, c: R) -> Self {
        LocPolyFn {
            p,
            level: 0,
            degree: 0,
            polys: vec![Poly::constant(c)],
            chi_inverse_twist: false,
        }
    }

    /// `1_{b + p^hℤₚ} · P(x)`.
    pub fn indicator_times(p: u32, b: i64, level: u32, degree: usize, poly: &Poly<R>) -> Result<Self> {
        let q = (p as i64).pow(level);
        let z = poly.zero_elem().clone();
        let polys = (0..q)
            .map(|i| if i == b.rem_euclid(q) { poly.clone() } else { Poly::zero(&z) })
            .collect();
        Self::from_classes(p, level, degree, polys)
    }

    /// The prime.
    pub fn p(&self) -> u32 {
        self.p
    }

    /// Level `h`.
    pub fn level(&self) -> u32 {
        self.level
    }

    /// Degree bound `D`.
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Per-class polynomials.
    pub fn classes(&self) -> &[Poly<R>] {
        &self.polys
    }

    /// Whether the χ⁻¹ twist tag is set.
    pub fn has_chi_inverse_twist(&self) -> bool {
        self.chi_inverse_twist
    }

    /// Set the χ⁻¹ twist tag.
    pub fn with_chi_inverse_twist(mut self, tag: bool) -> Self {
        self.chi_inverse_twist = tag;
        self
    }

    fn zero_elem(&self) -> R {
        self.polys[0].zero_elem().clone()
    }

    fn class_of(&self, x: &BigRational) -> Result<usize> {
        let r = rational_mod_pk(x, self.p, self.level)
            .ok_or_else(|| Error::InvalidArgument(format!("{x} is not a p-adic integer")))?;
        Ok(r.try_into().expect("residue fits"))
    }

    /// `φ(x)` for `x ∈ ℤ_(p)`.
    pub fn eval(&self, x: &BigRational) -> Result<R> {
        let c = self.class_of(x)?;
        Ok(self.polys[c].eval(&self.zero_elem().from_rational_like(x)))
    }

    /// The `k`-th derivative `φ^{(k)}(x)`.
    pub fn jet(&self, x: &BigRational, k: u32) -> Result<R> {
        let c = self.class_of(x)?;
        let mut d = self.polys[c].clone();
        for _ in 0..k {
            d = d.derivative();
        }
        Ok(d.eval(&self.zero_elem().from_rational_like(x)))
    }

    /// Re-express at a finer level `h′ ≥ h`.
    pub fn refine(&self, level: u32) -> Result<Self> {
        if level < self.level {
            return Err(Error::InvalidArgument(format!(
                "cannot refine level {} down to {level}",
                self.level
            )));
        }
        let q_old = (self.p as usize).pow(self.level);
        let q_new = (self.p as usize).pow(level);
        Ok(LocPolyFn {
            polys: (0..q_new).map(|i| self.polys[i % q_old].clone()).collect(),
            level,
            ..self.clone()
        })
    }

    fn common(&self, other: &Self) -> Result<(Self, Self)> {
        if self.p != other.p {
            return Err(Error::RingMismatch(format!("functions over p = {} and p = {}", self.p, other.p)));
        }
        let h = self.level.max(other.level);
        Ok((self.refine(h)?, other.refine(h)?))
    }

    /// Sum.
    pub fn add(&self, other: &Self) -> Result<Self> {
        let (a, b) = self.common(other)?;
        Ok(LocPolyFn {
            degree: a.degree.max(b.degree),
            polys: a.polys.iter().zip(&b.polys).map(|(x, y)| x.add(y)).collect(),
            ..a
        })
    }

    /// Difference.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(&self.zero_elem().from_int_like(-1)))
    }

    /// Multiplication by a constant.
    pub fn scale(&self, c: &R) -> Self {
        LocPolyFn {
            polys: self.polys.iter().map(|q| q.scale(c)).collect(),
            ..self.clone()
        }
    }

    /// `x·φ` (the degree bound grows by one).
    pub fn mul_x(&self) -> Self {
        let x = Poly::x(&self.zero_elem());
        LocPolyFn {
            degree: self.degree + 1,
            polys: self.polys.iter().map(|q| q.mul(&x)).collect(),
            ..self.clone()
        }
    }

    /// `d/dx`.
    pub fn derivative(&self) -> Self {
        LocPolyFn {
            polys: self.polys.iter().map(|q| q.derivative()).collect(),
            ..self.clone()
        }
    }

    /// `ψ(φ)(x) = φ(px)`: the class `j mod p^{h−1}` receives `P_{pj mod p^h}(px)`.
    pub fn psi_fn(&self) -> Self {
        let z = self.zero_elem();
        let p_elem = z.from_int_like(self.p as i64);
        let zero = z.zero_like();
        if self.level == 0 {
            return LocPolyFn {
                polys: vec![self.polys[0].affine_substitute(&p_elem, &zero)],
                ..self.clone()
            };
        }
        let q = (self.p as usize).pow(self.level);
        let q_new = q / self.p as usize;
        let polys = (0..q_new)
            .map(|j| self.polys[(self.p as usize * j) % q].affine_substitute(&p_elem, &zero))
            .collect();
        LocPolyFn {
            level: self.level - 1,
            polys,
            ..self.clone()
        }
    }

    /// Whether the function vanishes identically.
    pub fn is_zero(&self) -> bool {
        self.polys.iter().all(|q| q.is_zero())
    }

    /// Equality as functions (after refining to a common level).
    pub fn same_function(&self, other: &Self) -> Result<bool> {
        Ok(self.sub(other)?.is_zero())
    }

    /// JSON view.
    pub fn to_json(&self, render: impl Fn(&R) -> String) -> LocPolyJson {
        LocPolyJson {
            level: self.level,
            degree: self.degree,
            classes: self.polys.iter().map(|q| q.coeffs().iter().map(&render).collect()).collect(),
            chi_inverse_twist: self.chi_inverse_twist,
        }
    }
}

/// The polynomial `binom(−x−1, k)` in `x`.
fn colmez_basis<R: Ring>(k: usize, template: &R) -> Poly<R> {
    let m1 = template.from_int_like(-1);
    binomial_poly(k, template).affine_substitute(&m1, &m1)
}

/// Colmez transform of a windowed series: `φ_f(x) = Σ_{k≥1} a_{−k} binom(−x−1, k−1)`.
///
/// The negative part must be a known Laurent polynomial whose degree in `T⁻¹`
/// is at most `degree + 1`; otherwise the function is not a polynomial of
/// degree `≤ degree` and the call fails.
pub fn colmez<R: Ring>(f: &RobbaElement<R>, degree: usize) -> Result<LocPolyFn<R>> {
    let (_, minus) = f.split();
    if minus.tail_low() {
        return Err(Error::WindowOverflow {
            op: "colmez",
            detail: "unknown negative powers: the transform is not determined on the window".into(),
        });
    }
    let z = f.zero_coeff().clone();
    let mut acc = Poly::zero(&z);
    for (n, c) in minus.terms() {
        let k = (-n) as usize;
        if k > degree + 1 {
            return Err(Error::WindowOverflow {
                op: "colmez",
                detail: format!("T^{n} contributes degree {} > {degree}", k - 1),
            });
        }
        acc = acc.add(&colmez_basis(k - 1, &z).scale(c));
    }
    Ok(LocPolyFn::from_poly(f.p(), degree, acc)?.with_chi_inverse_twist(true))
}

/// Colmez transform of an exact rational element, at its own level
/// (`φ_f` is polynomial of degree `< pole order` on each ball `i + p^hℤₚ`).
pub fn colmez_exact<R: Ring>(f: &CycloFrac<R>, degree: usize) -> Result<LocPolyFn<R>> {
    let f = f.clone().reduce();
    let z = f.zero_elem();
    let m = f.pole_order() as usize;
    if m > degree + 1 {
        return Err(Error::WindowOverflow {
            op: "colmez",
            detail: format!("pole order {m} needs degree {} > {degree}", m - 1),
        });
    }
    let p = f.p();
    let level = f.level();
    let q = (p as u64).pow(level);
    let q_elem = z.from_int_like(q as i64);
    let q_inv = q_elem.try_inverse()?;
    let mut polys = Vec::with_capacity(q as usize);
    for i in 0..q {
        let values = (0..=degree as u64)
            .map(|t| f.colmez_value(i + t * q))
            .collect::<Result<Vec<_>>>()?;
        let in_t = newton_interpolate(&values, &z);
        // t = (x − i)/q.
        let shift = -(z.from_int_like(i as i64) * q_inv.clone());
        polys.push(in_t.affine_substitute(&q_inv, &shift));
    }
    Ok(LocPolyFn::from_classes(p, level, degree, polys)?.with_chi_inverse_twist(true))
}

/// A preimage of a polynomial under the Colmez transform: the unique
/// `f = Σ_{k=1}^{D+1} a_{−k} T^{−k}` with `φ_f = P`.
pub fn colmez_section<R: Ring>(phi: &LocPolyFn<R>, cap: Window) -> Result<RobbaElement<R>> {
    if phi.level != 0 {
        return Err(Error::InvalidArgument(
            "only globally polynomial functions have a Laurent-polynomial preimage".into(),
        ));
    }
    let z = phi.zero_elem();
    let mut rest = phi.polys[0].clone();
    let d = match rest.degree() {
        None => return Ok(RobbaElement::zero(phi.p, cap, &z)),
        Some(d) => d,
    };
    if (d as i64 + 1) > -cap.lo {
        return Err(Error::WindowOverflow {
            op: "colmez_section",
            detail: format!("degree {d} needs T^-{}", d + 1),
        });
    }
    let mut coeffs = vec![z.clone(); d + 1];
    for k in (0..=d).rev() {
        let b = colmez_basis(k, &z);
        let lead = b.coeff(k).try_inverse()?;
        let c = rest.coeff(k) * lead;
        rest = rest.sub(&b.scale(&c));
        coeffs[k] = c;
    }
    // coeffs[k] multiplies T^{−(k+1)}.
    let laurent: Vec<R> = coeffs.into_iter().rev().collect();
    RobbaElement::from_coeffs(phi.p, cap, -(d as i64) - 1, laurent, &z)
}

/// Residue pairing `res₀(σ_{−1}(𝒜_μ) · f · dT/(1+T))`.
pub fn pair<R: Ring>(mu: &Distribution<R>, f: &RobbaElement<R>) -> Result<R> {
    let p = f.p();
    let cap = f.cap();
    let z = f.zero_coeff().clone();
    let amice = mu.amice(p, cap)?;
    let twisted = amice.sigma(&-BigRational::one())?;
    let inv = RobbaElement::one_plus_t_pow(p, cap, &-BigRational::one(), &z)?;
    twisted.mul(f)?.mul(&inv)?.res0()
}

/// `∫ φ_f μ` computed from the moments of `μ` and the Colmez transform of `f`
/// (the other side of the pairing identity).
pub fn pair_via_functions<R: Ring>(mu: &Distribution<R>, f: &RobbaElement<R>, degree: usize) -> Result<R> {
    mu.integrate(&colmez(f, degree)?)
}

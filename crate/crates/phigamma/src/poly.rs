//! Dense univariate polynomials and Laurent polynomials over a ring.

use crate::coefficients::{binom_ring, Ring};
use crate::error::{Error, Result};

/// Dense polynomial `Σ c_i x^i` (coefficients from degree 0 upwards).
#[derive(Clone, Debug, PartialEq)]
pub struct Poly<R> {
    coeffs: Vec<R>,
    zero: R,
}

impl<R: Ring> Poly<R> {
    /// The zero polynomial over the ring of `template`.
    pub fn zero(template: &R) -> Self {
        Poly {
            coeffs: Vec::new(),
            zero: template.zero_like(),
        }
    }

    /// Polynomial from coefficients (low to high).
    pub fn new(coeffs: Vec<R>, template: &R) -> Self {
        let mut p = Poly {
            coeffs,
            zero: template.zero_like(),
        };
        p.trim();
        p
    }

    /// The constant polynomial `c`.
    pub fn constant(c: R) -> Self {
        let zero = c.zero_like();
        Self::new(vec![c], &zero)
    }

    /// The monomial `c x^k`.
    pub fn monomial(c: R, k: usize) -> Self {
        let zero = c.zero_like();
        let mut v = vec![zero.clone(); k + 1];
        v[k] = c;
        Self::new(v, &zero)
    }

    /// The variable `x`.
    pub fn x(template: &R) -> Self {
        Self::monomial(template.one_like(), 1)
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(|c| c.is_zero_elem()) {
            self.coeffs.pop();
        }
    }

    /// Coefficients, low to high (no trailing zeros).
    pub fn coeffs(&self) -> &[R] {
        &self.coeffs
    }

    /// Coefficient of `x^i` (zero beyond the degree).
    pub fn coeff(&self, i: usize) -> R {
        self.coeffs.get(i).cloned().unwrap_or_else(|| self.zero.clone())
    }

    /// Zero element of the coefficient ring.
    pub fn zero_elem(&self) -> &R {
        &self.zero
    }

    /// Degree (`None` for the zero polynomial).
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Whether all coefficients are known to vanish.
    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Sum.
    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new((0..n).map(|i| self.coeff(i) + other.coeff(i)).collect(), &self.zero)
    }

    /// Difference.
    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    /// Negation.
    pub fn neg(&self) -> Self {
        Self::new(self.coeffs.iter().map(|c| -c.clone()).collect(), &self.zero)
    }

    /// Multiplication by a constant.
    pub fn scale(&self, s: &R) -> Self {
        Self::new(self.coeffs.iter().map(|c| s.clone() * c.clone()).collect(), &self.zero)
    }

    /// Product.
    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero(&self.zero);
        }
        let mut out = vec![self.zero.clone(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero_elem() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        Self::new(out, &self.zero)
    }

    /// Non-negative power.
    pub fn pow(&self, e: usize) -> Self {
        let mut acc = Self::constant(self.zero.one_like());
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Multiply by `x^k`.
    pub fn shift(&self, k: usize) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let mut v = vec![self.zero.clone(); k];
        v.extend(self.coeffs.iter().cloned());
        Self::new(v, &self.zero)
    }

    /// Keep only the terms of degree `≤ d`.
    pub fn truncate(&self, d: usize) -> Self {
        Self::new(self.coeffs.iter().take(d + 1).cloned().collect(), &self.zero)
    }

    /// Evaluation by Horner's rule.
    pub fn eval(&self, x: &R) -> R {
        let mut acc = self.zero.clone();
        for c in self.coeffs.iter().rev() {
            acc = acc * x.clone() + c.clone();
        }
        acc
    }

    /// Formal derivative.
    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c.mul_int(i as i64))
                .collect(),
            &self.zero,
        )
    }

    /// Composition `self(q(x))`.
    pub fn compose(&self, q: &Self) -> Self {
        let mut acc = Self::zero(&self.zero);
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(q).add(&Self::constant(c.clone()));
        }
        acc
    }

    /// Substitute `x ↦ αx + β`.
    pub fn affine_substitute(&self, alpha: &R, beta: &R) -> Self {
        let q = Self::new(vec![beta.clone(), alpha.clone()], &self.zero);
        self.compose(&q)
    }

    /// Division with remainder by a polynomial with unit leading coefficient.
    pub fn div_rem(&self, divisor: &Self) -> Result<(Self, Self)> {
        let dd = divisor
            .degree()
            .ok_or_else(|| Error::InvalidArgument("division by the zero polynomial".into()))?;
        let lead_inv = divisor.coeffs[dd].try_inverse()?;
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return Ok((Self::zero(&self.zero), self.clone()));
        }
        let mut quot = vec![self.zero.clone(); rem.len() - dd];
        for k in (dd..rem.len()).rev() {
            let c = rem[k].clone() * lead_inv.clone();
            if c.is_zero_elem() {
                continue;
            }
            quot[k - dd] = c.clone();
            for (i, g) in divisor.coeffs.iter().enumerate() {
                rem[k - dd + i] = rem[k - dd + i].clone() - c.clone() * g.clone();
            }
        }
        rem.truncate(dd);
        Ok((Self::new(quot, &self.zero), Self::new(rem, &self.zero)))
    }

    /// Map coefficients into another ring.
    pub fn map<S: Ring>(&self, template: &S, f: impl Fn(&R) -> S) -> Poly<S> {
        Poly::new(self.coeffs.iter().map(f).collect(), template)
    }
}

/// The polynomial `binom(x, n)` in the variable `x`.
pub fn binomial_poly<R: Ring>(n: usize, template: &R) -> Poly<R> {
    let mut acc = Poly::constant(template.one_like());
    for i in 0..n {
        let lin = Poly::new(vec![template.from_int_like(-(i as i64)), template.one_like()], template);
        acc = acc.mul(&lin);
    }
    let mut fact = template.one_like();
    for i in 1..=n {
        fact = fact.mul_int(i as i64);
    }
    acc.scale(&fact.try_inverse().expect("n! is invertible in characteristic 0"))
}

/// Generalized binomial coefficient `binom(x, k)` (re-exported for convenience).
pub fn binom<R: Ring>(x: &R, k: usize) -> R {
    binom_ring(x, k)
}

/// Laurent polynomial `x^offset · poly(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LaurentPoly<R> {
    /// Exponent of the lowest stored term.
    pub offset: i64,
    /// Coefficients from `x^offset` upwards.
    pub poly: Poly<R>,
}

impl<R: Ring> LaurentPoly<R> {
    /// Zero.
    pub fn zero(template: &R) -> Self {
        LaurentPoly {
            offset: 0,
            poly: Poly::zero(template),
        }
    }

    /// From an ordinary polynomial.
    pub fn from_poly(poly: Poly<R>) -> Self {
        LaurentPoly { offset: 0, poly }.normalized()
    }

    /// The monomial `c x^k`.
    pub fn monomial(c: R, k: i64) -> Self {
        LaurentPoly {
            offset: k,
            poly: Poly::constant(c),
        }
        .normalized()
    }

    /// Strip leading zero coefficients into the offset.
    pub fn normalized(self) -> Self {
        let lead = self.poly.coeffs().iter().position(|c| !c.is_zero_elem());
        match lead {
            None => LaurentPoly {
                offset: 0,
                poly: Poly::zero(self.poly.zero_elem()),
            },
            Some(0) => self,
            Some(k) => LaurentPoly {
                offset: self.offset + k as i64,
                poly: Poly::new(self.poly.coeffs()[k..].to_vec(), self.poly.zero_elem()),
            },
        }
    }

    /// Whether zero.
    pub fn is_zero(&self) -> bool {
        self.poly.is_zero()
    }

    /// Lowest exponent present (None for zero).
    pub fn min_exp(&self) -> Option<i64> {
        (!self.is_zero()).then_some(self.offset)
    }

    /// Highest exponent present (None for zero).
    pub fn max_exp(&self) -> Option<i64> {
        self.poly.degree().map(|d| self.offset + d as i64)
    }

    /// Coefficient of `x^k`.
    pub fn coeff(&self, k: i64) -> R {
        if k < self.offset {
            self.poly.zero_elem().clone()
        } else {
            self.poly.coeff((k - self.offset) as usize)
        }
    }

    /// Iterate over `(exponent, coefficient)` for nonzero terms.
    pub fn terms(&self) -> impl Iterator<Item = (i64, &R)> {
        self.poly
            .coeffs()
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero_elem())
            .map(move |(i, c)| (self.offset + i as i64, c))
    }

    fn align(&self, other: &Self) -> (i64, Poly<R>, Poly<R>) {
        let m = self.offset.min(other.offset);
        (
            m,
            self.poly.shift((self.offset - m) as usize),
            other.poly.shift((other.offset - m) as usize),
        )
    }

    /// Sum.
    pub fn add(&self, other: &Self) -> Self {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let (m, a, b) = self.align(other);
        LaurentPoly { offset: m, poly: a.add(&b) }.normalized()
    }

    /// Difference.
    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    /// Negation.
    pub fn neg(&self) -> Self {
        LaurentPoly {
            offset: self.offset,
            poly: self.poly.neg(),
        }
    }

    /// Multiplication by a constant.
    pub fn scale(&self, s: &R) -> Self {
        LaurentPoly {
            offset: self.offset,
            poly: self.poly.scale(s),
        }
        .normalized()
    }

    /// Product.
    pub fn mul(&self, other: &Self) -> Self {
        LaurentPoly {
            offset: self.offset + other.offset,
            poly: self.poly.mul(&other.poly),
        }
        .normalized()
    }

    /// Multiply by `x^k`.
    pub fn shift(&self, k: i64) -> Self {
        LaurentPoly {
            offset: self.offset + k,
            poly: self.poly.clone(),
        }
    }

    /// Substitute `x ↦ x^m` for a nonzero integer `m`.
    pub fn substitute_power(&self, m: i64) -> Self {
        let zero = self.poly.zero_elem().clone();
        let mut acc = LaurentPoly::zero(&zero);
        for (k, c) in self.terms() {
            acc = acc.add(&LaurentPoly::monomial(c.clone(), k * m));
        }
        acc
    }

    /// Keep the terms whose exponent is divisible by `m` and divide the exponents by `m`.
    pub fn extract_multiples(&self, m: i64) -> Self {
        let zero = self.poly.zero_elem().clone();
        let mut acc = LaurentPoly::zero(&zero);
        for (k, c) in self.terms() {
            if k.rem_euclid(m) == 0 {
                acc = acc.add(&LaurentPoly::monomial(c.clone(), k / m));
            }
        }
        acc
    }

    /// `x · d/dx`.
    pub fn theta(&self) -> Self {
        let zero = self.poly.zero_elem().clone();
        let mut acc = LaurentPoly::zero(&zero);
        for (k, c) in self.terms() {
            acc = acc.add(&LaurentPoly::monomial(c.mul_int(k), k));
        }
        acc
    }

    /// As an ordinary polynomial (requires no negative exponents).
    pub fn to_poly(&self) -> Option<Poly<R>> {
        if self.is_zero() {
            return Some(Poly::zero(self.poly.zero_elem()));
        }
        (self.offset >= 0).then(|| self.poly.shift(self.offset as usize))
    }
}

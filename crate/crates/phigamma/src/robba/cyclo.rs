//! Exact rational functions `num(X) / (X^q − 1)^m` in `X = 1 + T`.
//!
//! Finite Laurent polynomials in `T` are exactly the level-0 fractions
//! `G(X)/(X − 1)^m`.  The space of fractions with `q` a power of `p` is stable
//! under φ, ψ, `∂`, `σ_{−1}`, multiplication by `(1+T)^c` and hence under the
//! restrictions `Res_{a+pⁿℤₚ}`, which lets those operators be computed exactly
//! before expanding into a window of Laurent coefficients.

use num_bigint::BigInt;
use num_rational::BigRational;

use super::{Beyond, RobbaElement, Window};
use crate::coefficients::{binom_rational, Ring};
use crate::error::{Error, Result};
use crate::poly::{LaurentPoly, Poly};

/// The element `num(X) / (X^q − 1)^m` with `X = 1 + T` and `q = p^level`.
#[derive(Debug, Clone, PartialEq)]
pub struct CycloFrac<R> {
    p: u32,
    level: u32,
    m: u32,
    num: LaurentPoly<R>,
}

/// `(X^q − 1)^m` as a polynomial in `X`.
fn denominator<R: Ring>(q: usize, m: u32, template: &R) -> Poly<R> {
    let mut d = vec![template.zero_like(); q + 1];
    d[0] = -template.one_like();
    d[q] = template.one_like();
    Poly::new(d, template).pow(m as usize)
}

/// `1 + X^q + … + X^{q(r−1)}`.
fn geometric<R: Ring>(q: usize, r: usize, template: &R) -> Poly<R> {
    let mut v = vec![template.zero_like(); q * (r - 1) + 1];
    for i in 0..r {
        v[q * i] = template.one_like();
    }
    Poly::new(v, template)
}

impl<R: Ring> CycloFrac<R> {
    /// A finite Laurent polynomial `f(T)` viewed as `G(X)/(X − 1)^m`.
    pub fn from_laurent_t(p: u32, f: &LaurentPoly<R>) -> Self {
        let zero = f.poly.zero_elem().clone();
        let m = f.min_exp().map_or(0, |e| (-e).max(0)) as u32;
        let g = f.shift(m as i64).to_poly().expect("shifted to non-negative exponents");
        let x_minus_one = Poly::new(vec![-zero.one_like(), zero.one_like()], &zero);
        let num = LaurentPoly::from_poly(g.compose(&x_minus_one));
        CycloFrac { p, level: 0, m, num }
    }

    /// The monomial `c (1+T)^k` for an integer `k`.
    pub fn x_power(p: u32, c: R, k: i64) -> Self {
        CycloFrac {
            p,
            level: 0,
            m: 0,
            num: LaurentPoly::monomial(c, k),
        }
    }

    /// The prime.
    pub fn p(&self) -> u32 {
        self.p
    }

    /// The level (`q = p^level`).
    pub fn level(&self) -> u32 {
        self.level
    }

    /// The pole order `m`.
    pub fn pole_order(&self) -> u32 {
        self.m
    }

    fn q(&self) -> usize {
        (self.p as usize).pow(self.level)
    }

    /// A zero coefficient.
    pub fn zero_elem(&self) -> R {
        self.num.poly.zero_elem().clone()
    }

    /// Whether the fraction vanishes.
    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// Rewrite over `(X^{q'} − 1)^{m'}` with `level' ≥ level` and `m' ≥ m`.
    pub fn raise(&self, level: u32, m: u32) -> Self {
        assert!(level >= self.level && m >= self.m, "raise only increases level and order");
        let z = self.zero_elem();
        let q = self.q();
        let q2 = (self.p as usize).pow(level);
        let s = geometric(q, q2 / q, &z).pow(self.m as usize);
        let extra = denominator(q2, m - self.m, &z);
        let factor = LaurentPoly::from_poly(s.mul(&extra));
        CycloFrac {
            p: self.p,
            level,
            m,
            num: self.num.mul(&factor),
        }
    }

    fn common(&self, other: &Self) -> (Self, Self) {
        let level = self.level.max(other.level);
        let m = self.m.max(other.m);
        (self.raise(level, m), other.raise(level, m))
    }

    /// Sum.
    pub fn add(&self, other: &Self) -> Self {
        let (a, b) = self.common(other);
        CycloFrac {
            num: a.num.add(&b.num),
            ..a
        }
        .reduce()
    }

    /// Difference.
    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    /// Negation.
    pub fn neg(&self) -> Self {
        CycloFrac {
            num: self.num.neg(),
            ..self.clone()
        }
    }

    /// Multiplication by a constant.
    pub fn scale(&self, c: &R) -> Self {
        CycloFrac {
            num: self.num.scale(c),
            ..self.clone()
        }
    }

    /// Product.
    pub fn mul(&self, other: &Self) -> Self {
        let level = self.level.max(other.level);
        let a = self.raise(level, self.m);
        let b = other.raise(level, other.m);
        CycloFrac {
            p: self.p,
            level,
            m: a.m + b.m,
            num: a.num.mul(&b.num),
        }
        .reduce()
    }

    /// Cancel common factors `X^q − 1` between numerator and denominator.
    pub fn reduce(mut self) -> Self {
        if self.num.is_zero() {
            self.m = 0;
            self.level = 0;
            return self;
        }
        let z = self.zero_elem();
        let d = denominator(self.q(), 1, &z);
        while self.m > 0 {
            let off = self.num.offset;
            let poly = self.num.poly.clone();
            match poly.div_rem(&d) {
                Ok((quot, rem)) if rem.is_zero() => {
                    self.num = LaurentPoly { offset: off, poly: quot }.normalized();
                    self.m -= 1;
                }
                _ => break,
            }
        }
        self
    }

    /// Multiplication by `(1+T)^c`.
    pub fn mul_x_power(&self, c: i64) -> Self {
        CycloFrac {
            num: self.num.shift(c),
            ..self.clone()
        }
    }

    /// Frobenius: `X ↦ X^p`.
    pub fn phi(&self) -> Self {
        CycloFrac {
            p: self.p,
            level: self.level + 1,
            m: self.m,
            num: self.num.substitute_power(self.p as i64),
        }
    }

    /// ψ: the left inverse of φ, `ψ(Σ X^i φ(f_i)) = f_0`.
    pub fn psi(&self) -> Self {
        let base = if self.level == 0 { self.raise(1, self.m) } else { self.clone() };
        CycloFrac {
            p: self.p,
            level: base.level - 1,
            m: base.m,
            num: base.num.extract_multiples(self.p as i64),
        }
        .reduce()
    }

    /// `σ_{−1}: X ↦ X^{−1}`.
    pub fn sigma_minus_one(&self) -> Self {
        let q = self.q() as i64;
        let sign = if self.m % 2 == 0 { 1 } else { -1 };
        let z = self.zero_elem();
        CycloFrac {
            num: self
                .num
                .substitute_power(-1)
                .shift(q * self.m as i64)
                .scale(&z.from_int_like(sign)),
            ..self.clone()
        }
    }

    /// `∂ = X d/dX`: `(X L′ D − m q X^q L) / D^{m+1}`.
    pub fn partial(&self) -> Self {
        let z = self.zero_elem();
        let q = self.q();
        let d = LaurentPoly::from_poly(denominator(q, 1, &z));
        let theta = self.num.theta();
        let first = theta.mul(&d);
        let second = self.num.shift(q as i64).scale(&z.from_int_like((self.m as i64) * q as i64));
        CycloFrac {
            p: self.p,
            level: self.level,
            m: self.m + 1,
            num: first.sub(&second),
        }
        .reduce()
    }

    /// `Res_{a+pⁿℤₚ} = (1+T)^a φⁿ ψⁿ (1+T)^{−a}`.
    pub fn restrict(&self, a: i64, n: u32) -> Result<Self> {
        let modulus = (self.p as i64).pow(n);
        if !(0..modulus).contains(&a) {
            return Err(Error::InvalidArgument(format!(
                "residue class representative {a} must lie in [0, {modulus})"
            )));
        }
        let mut f = self.mul_x_power(-a);
        for _ in 0..n {
            f = f.psi();
        }
        for _ in 0..n {
            f = f.phi();
        }
        Ok(f.mul_x_power(a))
    }

    /// Decompose as `A(X) + R_in(X)/(X^q − 1)^m` with `A` a Laurent polynomial
    /// and `R_in` a polynomial of degree `< qm`.
    pub fn decompose(&self) -> Result<(LaurentPoly<R>, Poly<R>)> {
        let z = self.zero_elem();
        if self.m == 0 {
            return Ok((self.num.clone(), Poly::zero(&z)));
        }
        let q = self.q();
        let dm = denominator(q, self.m, &z);
        let s = self.num.min_exp().map_or(0, |e| (-e).max(0));
        let p_poly = self.num.shift(s).to_poly().expect("non-negative after shift");
        // X^{-s} ≡ X^{cq−s} (Σ_{j<m} (−D)^j)^c  (mod D^m), c = ⌈s/q⌉.
        let c = (s as usize).div_ceil(q);
        let d1 = denominator(q, 1, &z);
        let minus_d = d1.neg();
        let mut e = Poly::zero(&z);
        let mut pw = Poly::constant(z.one_like());
        for _ in 0..self.m {
            e = e.add(&pw);
            pw = pw.mul(&minus_d);
        }
        let mut inv_s = Poly::monomial(z.one_like(), c * q - s as usize);
        for _ in 0..c {
            inv_s = inv_s.mul(&e).div_rem(&dm)?.1;
        }
        let r_in = inv_s.mul(&p_poly).div_rem(&dm)?.1;
        let shifted = p_poly.sub(&r_in.shift(s as usize));
        let (a_prime, rem) = shifted.div_rem(&dm)?;
        if !rem.is_zero() {
            return Err(Error::IdentityFailure(
                "cyclotomic decomposition left a nonzero remainder".into(),
            ));
        }
        let a = LaurentPoly {
            offset: -s,
            poly: a_prime,
        }
        .normalized();
        Ok((a, r_in))
    }

    /// Expand into the window as a Laurent series in `T`.
    pub fn to_window(&self, cap: Window) -> Result<RobbaElement<R>> {
        let z = self.zero_elem();
        let p = self.p;
        let (outer, inner) = self.decompose()?;
        // Outer part: Σ a_j (1+T)^j, binomial series for negative j.
        let hi = cap.hi as usize;
        let mut plus = vec![z.clone(); hi + 1];
        let mut plus_unknown = false;
        for (j, c) in outer.terms() {
            let jq = BigRational::from_integer(BigInt::from(j));
            if j < 0 || j as usize > hi {
                plus_unknown = true;
            }
            let top = if j >= 0 { (j as usize).min(hi) } else { hi };
            for (n, slot) in plus.iter_mut().enumerate().take(top + 1) {
                *slot = slot.clone() + c.clone() * z.from_rational_like(&binom_rational(&jq, n));
            }
        }
        // Inner part: R_in(1+T) / ((1+T)^q − 1)^m by descending long division.
        let depth = (-cap.lo) as usize;
        let q = self.q();
        let n = q * self.m as usize;
        let one_plus_t = Poly::new(vec![z.one_like(), z.one_like()], &z);
        let r: Vec<R> = inner.compose(&one_plus_t).coeffs().to_vec();
        let d: Vec<R> = denominator(q, 1, &z).compose(&one_plus_t).pow(self.m as usize).coeffs().to_vec();
        let get = |v: &Vec<R>, i: i64| -> R {
            if i < 0 || i as usize >= v.len() {
                z.clone()
            } else {
                v[i as usize].clone()
            }
        };
        let kmax = depth.max(if self.level == 0 { self.m as usize } else { 0 });
        let mut e = vec![z.clone(); kmax + 1];
        for k in 1..=kmax {
            let mut acc = get(&r, n as i64 - k as i64);
            for i in 1..k {
                acc = acc - e[i].clone() * get(&d, n as i64 - k as i64 + i as i64);
            }
            e[k] = acc;
        }
        let minus_unknown = if inner.is_zero() {
            false
        } else if self.level == 0 {
            e.iter().enumerate().any(|(k, c)| k > depth && !c.is_zero_elem())
        } else {
            true
        };
        RobbaElement::from_fn(
            p,
            cap,
            |k| {
                if k >= 0 {
                    Some(plus[k as usize].clone())
                } else {
                    Some(e[(-k) as usize].clone())
                }
            },
            Beyond::from_flag(minus_unknown),
            Beyond::from_flag(plus_unknown),
            &z,
        )
    }

    /// `φ_f(x) = −[X^x]` of the Taylor expansion at `X = 0` of the polar part,
    /// for an integer `x ≥ 0` (the Colmez transform evaluated at `x`).
    pub fn colmez_value(&self, x: u64) -> Result<R> {
        let z = self.zero_elem();
        let (_, inner) = self.decompose()?;
        if inner.is_zero() {
            return Ok(z);
        }
        let q = self.q() as u64;
        let m = self.m as i64;
        let mut acc = z.clone();
        for (j, c) in inner.coeffs().iter().enumerate() {
            let j = j as u64;
            if j > x || (x - j) % q != 0 || c.is_zero_elem() {
                continue;
            }
            let k = ((x - j) / q) as usize;
            let b = binom_rational(&BigRational::from_integer(BigInt::from(m - 1 + k as i64)), k);
            acc = acc + c.clone() * z.from_rational_like(&b);
        }
        // 1/D^m = (−1)^m Σ_k binom(m−1+k, k) X^{qk}, and φ_f = −[X^x](R_in/D^m).
        let sign = if m % 2 == 0 { -1 } else { 1 };
        Ok(acc.mul_int(sign))
    }
}

//! The coefficient rings `A ∈ {K, K[y]/(g), K[ε]/(εᵉ)}` over a scalar field `K`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{is_odd_prime, rational_mod_pk, rational_valuation, split_p, Ring, Scalar, Val};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Which of the three supported ring families a [`CoeffRing`] is.
#[derive(Debug, Clone, PartialEq)]
pub enum RingKind<K> {
    /// The scalar field itself (a point of the coefficient space).
    BaseField,
    /// `K[y]/(g)` for a monic irreducible `g`, coefficients listed from degree 0
    /// to degree `deg g` (the last one equal to 1).
    Extension(Vec<K>),
    /// `K[ε]/(εᵉ)`, a nonreduced test ring with nilradical `(ε)`.
    Dual(usize),
}

/// A coefficient ring descriptor together with the prime and working precision.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffRing<K> {
    kind: RingKind<K>,
    p: u32,
    precision: u32,
}

impl<K: Scalar> CoeffRing<K> {
    fn check_prime(p: u32) -> Result<()> {
        if is_odd_prime(p) {
            Ok(())
        } else {
            Err(Error::UnsupportedPrime(p))
        }
    }

    /// The base field `K` itself.
    pub fn base_field(p: u32, precision: u32) -> Result<Arc<Self>> {
        Self::check_prime(p)?;
        Ok(Arc::new(CoeffRing {
            kind: RingKind::BaseField,
            p,
            precision,
        }))
    }

    /// Dual numbers `K[ε]/(εᵉ)` with `e ≥ 2`.
    pub fn dual(p: u32, precision: u32, e: usize) -> Result<Arc<Self>> {
        Self::check_prime(p)?;
        if e < 2 {
            return Err(Error::InvalidArgument(format!(
                "nilpotence exponent must be at least 2, got {e}"
            )));
        }
        Ok(Arc::new(CoeffRing {
            kind: RingKind::Dual(e),
            p,
            precision,
        }))
    }

    /// The extension `K[y]/(g)`; `g` is given from degree 0 upwards and must be monic.
    ///
    /// Irreducibility over ℚₚ is certified by one of: degree one, the Eisenstein
    /// criterion, irreducibility of the reduction modulo `p`, or (in degree two)
    /// the discriminant not being a square.  Anything else is rejected.
    pub fn extension(p: u32, precision: u32, modulus: Vec<K>) -> Result<Arc<Self>> {
        Self::check_prime(p)?;
        if modulus.len() < 2 || !modulus.last().unwrap().is_one() {
            return Err(Error::BadModulus("defining polynomial must be monic of degree >= 1".into()));
        }
        let rational: Option<Vec<BigRational>> = modulus.iter().map(|c| c.to_rational()).collect();
        let rational = rational.ok_or_else(|| {
            Error::BadModulus("irreducibility can only be certified for rational coefficients".into())
        })?;
        certify_irreducible(&rational, p)?;
        Ok(Arc::new(CoeffRing {
            kind: RingKind::Extension(modulus),
            p,
            precision,
        }))
    }

    /// The ring family.
    pub fn kind(&self) -> &RingKind<K> {
        &self.kind
    }

    /// The prime `p`.
    pub fn p(&self) -> u32 {
        self.p
    }

    /// Working precision in p-adic digits.
    pub fn precision(&self) -> u32 {
        self.precision
    }

    /// Dimension of the ring over `K`.
    pub fn dim(&self) -> usize {
        match &self.kind {
            RingKind::BaseField => 1,
            RingKind::Extension(g) => g.len() - 1,
            RingKind::Dual(e) => *e,
        }
    }

    /// Nilpotence exponent `e` for dual numbers.
    pub fn nilpotence(&self) -> Option<usize> {
        match &self.kind {
            RingKind::Dual(e) => Some(*e),
            _ => None,
        }
    }

    /// The reduced ring: `K` for dual numbers, the ring itself otherwise.
    pub fn reduced(self: &Arc<Self>) -> Arc<Self> {
        match self.kind {
            RingKind::Dual(_) => Arc::new(CoeffRing {
                kind: RingKind::BaseField,
                p: self.p,
                precision: self.precision,
            }),
            _ => Arc::clone(self),
        }
    }

    /// The zero element.
    pub fn zero(self: &Arc<Self>) -> CoeffElement<K> {
        CoeffElement {
            ring: Arc::clone(self),
            coords: vec![K::zero(); self.dim()],
        }
    }

    /// The unit element.
    pub fn one(self: &Arc<Self>) -> CoeffElement<K> {
        self.scalar(K::one())
    }

    /// The image of a scalar.
    pub fn scalar(self: &Arc<Self>, k: K) -> CoeffElement<K> {
        let mut z = self.zero();
        z.coords[0] = k;
        z
    }

    /// The image of a rational number.
    pub fn rational(self: &Arc<Self>, q: &BigRational) -> CoeffElement<K> {
        self.scalar(K::from_rational(q))
    }

    /// The image of an integer.
    pub fn int(self: &Arc<Self>, n: i64) -> CoeffElement<K> {
        self.scalar(K::from_int(n))
    }

    /// The `i`-th canonical basis element (`y^i` or `ε^i`).
    pub fn basis(self: &Arc<Self>, i: usize) -> CoeffElement<K> {
        let mut z = self.zero();
        z.coords[i] = K::one();
        z
    }

    /// An element from its coordinates in the canonical basis.
    pub fn element(self: &Arc<Self>, coords: Vec<K>) -> Result<CoeffElement<K>> {
        if coords.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} coordinates, got {}",
                self.dim(),
                coords.len()
            )));
        }
        Ok(CoeffElement {
            ring: Arc::clone(self),
            coords,
        })
    }
}

/// Element of a coefficient ring: coordinates in the canonical basis
/// (`1`; `1, y, …, y^{d−1}`; or `1, ε, …, ε^{e−1}`).
#[derive(Clone, PartialEq)]
pub struct CoeffElement<K> {
    ring: Arc<CoeffRing<K>>,
    coords: Vec<K>,
}

impl<K: fmt::Debug> fmt::Debug for CoeffElement<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.coords)
    }
}

impl<K: Scalar + fmt::Display> fmt::Display for CoeffElement<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sym = match self.ring.kind {
            RingKind::BaseField => "",
            RingKind::Extension(_) => "y",
            RingKind::Dual(_) => "eps",
        };
        let mut first = true;
        for (i, c) in self.coords.iter().enumerate() {
            if c.is_zero_elem() && self.coords.len() > 1 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match i {
                0 => write!(f, "{c}")?,
                1 => write!(f, "({c})*{sym}")?,
                _ => write!(f, "({c})*{sym}^{i}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

impl<K: Scalar> CoeffElement<K> {
    /// The ring this element lives in.
    pub fn ring(&self) -> &Arc<CoeffRing<K>> {
        &self.ring
    }

    /// Coordinates in the canonical basis.
    pub fn coords(&self) -> &[K] {
        &self.coords
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.ring, &other.ring) || *self.ring == *other.ring {
            Ok(())
        } else {
            Err(Error::RingMismatch(format!(
                "{:?} vs {:?}",
                self.ring.kind_name(),
                other.ring.kind_name()
            )))
        }
    }

    /// Sum, failing on ring mismatch.
    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(CoeffElement {
            ring: Arc::clone(&self.ring),
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a.clone() + b.clone())
                .collect(),
        })
    }

    /// Product, failing on ring mismatch.
    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let coords = match &self.ring.kind {
            RingKind::BaseField => vec![self.coords[0].clone() * other.coords[0].clone()],
            RingKind::Dual(e) => {
                let mut c = vec![K::zero(); *e];
                for i in 0..*e {
                    if self.coords[i].is_zero_elem() {
                        continue;
                    }
                    for j in 0..(*e - i) {
                        c[i + j] = c[i + j].clone() + self.coords[i].clone() * other.coords[j].clone();
                    }
                }
                c
            }
            RingKind::Extension(g) => {
                let d = g.len() - 1;
                let mut c = vec![K::zero(); 2 * d - 1];
                for i in 0..d {
                    for j in 0..d {
                        c[i + j] = c[i + j].clone() + self.coords[i].clone() * other.coords[j].clone();
                    }
                }
                for k in (d..2 * d - 1).rev() {
                    let lead = c[k].clone();
                    if lead.is_zero_elem() {
                        continue;
                    }
                    for (i, gi) in g.iter().enumerate().take(d) {
                        c[k - d + i] = c[k - d + i].clone() - lead.clone() * gi.clone();
                    }
                }
                c.truncate(d);
                c
            }
        };
        Ok(CoeffElement {
            ring: Arc::clone(&self.ring),
            coords,
        })
    }

    /// Multiply by a scalar of `K`.
    pub fn scale(&self, k: &K) -> Self {
        CoeffElement {
            ring: Arc::clone(&self.ring),
            coords: self.coords.iter().map(|c| c.clone() * k.clone()).collect(),
        }
    }

    /// Inverse; over dual numbers a non-unit reports its annihilator.
    pub fn inverse(&self) -> Result<Self> {
        match &self.ring.kind {
            RingKind::BaseField => Ok(self.ring.scalar(self.coords[0].try_inverse()?)),
            RingKind::Dual(e) => {
                if self.coords[0].is_zero_elem() {
                    let k = self.coords.iter().position(|c| !c.is_zero_elem());
                    let annihilator = match k {
                        None => "1".to_string(),
                        Some(k) if e - k == 1 => "eps".to_string(),
                        Some(k) => format!("eps^{}", e - k),
                    };
                    return Err(Error::NonUnit { annihilator });
                }
                let a0inv = self.coords[0].try_inverse()?;
                // a = a0 (1 + n) with n nilpotent: a^{-1} = a0^{-1} Σ (−n)^j.
                let mut n = self.scale(&a0inv);
                n.coords[0] = K::zero();
                let minus_n = -n;
                let mut term = self.ring.one();
                let mut acc = self.ring.one();
                for _ in 1..*e {
                    term = term * minus_n.clone();
                    acc = acc + term.clone();
                }
                Ok(acc.scale(&a0inv))
            }
            RingKind::Extension(_) => {
                let m = self.mul_matrix();
                let d = self.ring.dim();
                let mut rhs = vec![K::zero(); d];
                rhs[0] = K::one();
                match m.solve(&rhs, self.ring.p)? {
                    Some(x) => Ok(CoeffElement {
                        ring: Arc::clone(&self.ring),
                        coords: x,
                    }),
                    None => Err(Error::NonUnit {
                        annihilator: "nonzero (multiplication map singular)".into(),
                    }),
                }
            }
        }
    }

    /// Per-coordinate valuations.
    pub fn coord_valuations(&self) -> Vec<Val> {
        self.coords.iter().map(|c| c.valuation(self.ring.p)).collect()
    }

    /// Minimum coordinate valuation (+∞ for exact zero).
    pub fn val(&self) -> Val {
        self.coord_valuations().into_iter().min().unwrap_or(Val::Inf)
    }

    /// Image in the reduced ring (the ε⁰ coordinate over dual numbers; identity otherwise).
    pub fn residue_reduce(&self) -> Self {
        match self.ring.kind {
            RingKind::Dual(_) => self.ring.reduced().scalar(self.coords[0].clone()),
            _ => self.clone(),
        }
    }

    /// Matrix of multiplication by `self` in the canonical basis (column j = self · basis_j).
    pub fn mul_matrix(&self) -> Matrix<K> {
        let d = self.ring.dim();
        let mut m = Matrix::zeros(d, d);
        for j in 0..d {
            let col = self.clone() * self.ring.basis(j);
            for i in 0..d {
                m.set(i, j, col.coords[i].clone());
            }
        }
        m
    }

    /// The scalar value when the element lies in `K · 1`.
    pub fn as_scalar(&self) -> Option<&K> {
        if self.coords[1..].iter().all(|c| c.is_zero_elem()) {
            Some(&self.coords[0])
        } else {
            None
        }
    }

    /// Exact rational value, when the element is an exact rational multiple of 1.
    pub fn as_rational(&self) -> Option<BigRational> {
        self.as_scalar().and_then(|k| k.to_rational())
    }
}

impl<K> CoeffRing<K> {
    fn kind_name(&self) -> &'static str {
        match self.kind {
            RingKind::BaseField => "base field",
            RingKind::Extension(_) => "finite extension",
            RingKind::Dual(_) => "dual numbers",
        }
    }
}

impl<K: Scalar> Add for CoeffElement<K> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.checked_add(&rhs).expect("ring mismatch in addition")
    }
}

impl<K: Scalar> Sub for CoeffElement<K> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.checked_add(&(-rhs)).expect("ring mismatch in subtraction")
    }
}

impl<K: Scalar> Mul for CoeffElement<K> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.checked_mul(&rhs).expect("ring mismatch in multiplication")
    }
}

impl<K: Scalar> Neg for CoeffElement<K> {
    type Output = Self;
    fn neg(self) -> Self {
        CoeffElement {
            ring: self.ring,
            coords: self.coords.into_iter().map(|c| -c).collect(),
        }
    }
}

impl<K: Scalar> Ring for CoeffElement<K> {
    fn zero_like(&self) -> Self {
        self.ring.zero()
    }
    fn one_like(&self) -> Self {
        self.ring.one()
    }
    fn from_rational_like(&self, q: &BigRational) -> Self {
        self.ring.rational(q)
    }
    fn is_zero_elem(&self) -> bool {
        self.coords.iter().all(|c| c.is_zero_elem())
    }
    fn try_inverse(&self) -> Result<Self> {
        self.inverse()
    }
    fn valuation(&self, _p: u32) -> Val {
        self.val()
    }
    fn is_unit(&self) -> bool {
        match self.ring.kind {
            RingKind::Dual(_) | RingKind::BaseField => !self.coords[0].is_zero_elem(),
            RingKind::Extension(_) => !self.is_zero_elem(),
        }
    }
}

/// Certify that a monic rational polynomial is irreducible over ℚₚ.
fn certify_irreducible(g: &[BigRational], p: u32) -> Result<()> {
    let d = g.len() - 1;
    if d == 1 {
        return Ok(());
    }
    let integral = g.iter().all(|c| rational_valuation(c, p) >= Val::Fin(0));
    if integral {
        // Eisenstein: all non-leading coefficients divisible by p, constant term exactly once.
        let eis = g[..d].iter().all(|c| rational_valuation(c, p) >= Val::Fin(1))
            && rational_valuation(&g[0], p) == Val::Fin(1);
        if eis {
            return Ok(());
        }
        let reduced: Vec<i64> = g
            .iter()
            .map(|c| {
                let r = rational_mod_pk(c, p, 1).expect("p-integral");
                i64::try_from(r).unwrap()
            })
            .collect();
        if fp_irreducible(&reduced, p as i64) {
            return Ok(());
        }
    }
    if d == 2 {
        let disc = &g[1] * &g[1] - BigRational::from_integer(4.into()) * &g[0];
        if !is_padic_square(&disc, p) {
            return Ok(());
        }
        return Err(Error::BadModulus("quadratic with square discriminant is reducible".into()));
    }
    Err(Error::BadModulus(
        "irreducibility over Q_p could not be certified (use Eisenstein or unramified moduli)".into(),
    ))
}

fn is_padic_square(q: &BigRational, p: u32) -> bool {
    if q.is_zero() {
        return true;
    }
    let v = rational_valuation(q, p).or_cap(0);
    if v % 2 != 0 {
        return false;
    }
    let (_, n) = split_p(q.numer(), p);
    let (_, dd) = split_p(q.denom(), p);
    let u = (n * dd).mod_floor(&BigInt::from(p));
    let e = BigInt::from((p - 1) / 2);
    u.modpow(&e, &BigInt::from(p)).is_one()
}

/// Irreducibility over F_p of a monic polynomial (coefficients low to high), by
/// checking gcd(f, y^{p^k} − y) = 1 for k ≤ deg/2.
fn fp_irreducible(f: &[i64], p: i64) -> bool {
    let norm = |v: &mut Vec<i64>| {
        for c in v.iter_mut() {
            *c = c.rem_euclid(p);
        }
        while v.len() > 1 && *v.last().unwrap() == 0 {
            v.pop();
        }
    };
    let mut f = f.to_vec();
    norm(&mut f);
    let d = f.len() - 1;
    let inv = |a: i64| -> i64 {
        let mut r = 1i64;
        let mut b = a.rem_euclid(p);
        let mut e = p - 2;
        while e > 0 {
            if e & 1 == 1 {
                r = r * b % p;
            }
            b = b * b % p;
            e >>= 1;
        }
        r
    };
    let polymod = |a: &[i64], m: &[i64]| -> Vec<i64> {
        let mut a = a.to_vec();
        norm(&mut a);
        let dm = m.len() - 1;
        let li = inv(*m.last().unwrap());
        while a.len() > dm && !(a.len() == 1 && a[0] == 0) {
            let k = a.len() - 1;
            let c = a[k] * li % p;
            for i in 0..=dm {
                a[k - dm + i] = (a[k - dm + i] - c * m[i]).rem_euclid(p);
            }
            norm(&mut a);
            if a.len() - 1 < dm {
                break;
            }
        }
        a
    };
    let mulmod = |a: &[i64], b: &[i64], m: &[i64]| -> Vec<i64> {
        let mut c = vec![0i64; a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                c[i + j] = (c[i + j] + x * y) % p;
            }
        }
        polymod(&c, m)
    };
    let gcd_is_one = |a: &[i64], b: &[i64]| -> bool {
        let mut x = a.to_vec();
        let mut y = b.to_vec();
        norm(&mut x);
        norm(&mut y);
        while !(y.len() == 1 && y[0] == 0) {
            let r = polymod(&x, &y);
            x = y;
            y = r;
        }
        x.len() == 1
    };
    // h = y^{p^k} mod f
    let mut h = polymod(&[0, 1], &f);
    for _ in 1..=d / 2 {
        // raise to the p-th power
        let mut acc = vec![1i64];
        let mut base = h.clone();
        let mut e = p;
        while e > 0 {
            if e & 1 == 1 {
                acc = mulmod(&acc, &base, &f);
            }
            base = mulmod(&base, &base, &f);
            e >>= 1;
        }
        h = acc;
        let mut diff = h.clone();
        if diff.len() < 2 {
            diff.resize(2, 0);
        }
        diff[1] -= 1;
        norm(&mut diff);
        if diff.len() == 1 && diff[0] == 0 {
            return false;
        }
        if !gcd_is_one(&f, &diff) {
            return false;
        }
    }
    true
}

//! Locally analytic characters `δ: ℚₚ^× → A^×` and the regularity predicate.
//!
//! A character is stored through the decomposition `ℚₚ^× = p^ℤ × μ_{p−1} × (1+pℤₚ)`:
//! its value at `p`, its tame index `i` (so that `δ(ζ) = ζ^i` on roots of unity),
//! and its weight `κ = δ′(1)` (so that `δ(u) = exp(κ log u)` on `1 + pℤₚ`).

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::coefficients::{rational_valuation, CoeffElement, CoeffRing, PAdic, Ring, RingKind, Scalar, Val};
use crate::error::{Error, Result};

/// Domain tag: a character of ℚₚ^×, or only of ℤₚ^× (value at `p` ignored).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    /// Characters of ℚₚ^×.
    QpTimes,
    /// Restrictions to ℤₚ^×.
    ZpUnits,
}

/// A locally analytic character with values in a coefficient ring.
#[derive(Debug, Clone, PartialEq)]
pub struct Character<K> {
    value_at_p: CoeffElement<K>,
    tame: i64,
    weight: CoeffElement<K>,
    domain: Domain,
}

/// Which non-regular shape a character was found to have.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IrregularForm {
    /// `x^{−i}`.
    XInverse,
    /// `χ · x^{i}`.
    ChiX,
}

/// Outcome of the regularity test.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regularity {
    /// No point reduction is of the form `x^{−i}` or `χx^{i}` (within the search bound).
    Regular,
    /// A witness of non-regularity.
    Fails {
        /// The exponent `i ≥ 0`.
        i: i64,
        /// The shape matched.
        form: IrregularForm,
        /// Description of the point at which the match occurs.
        point: String,
    },
}

impl<K: Scalar> Character<K> {
    /// A character from its three components; `value_at_p` must be a unit.
    pub fn new(value_at_p: CoeffElement<K>, tame: i64, weight: CoeffElement<K>) -> Result<Self> {
        if value_at_p.ring() != weight.ring() {
            return Err(Error::RingMismatch("character components".into()));
        }
        if !value_at_p.is_unit() {
            return Err(Error::NonUnit {
                annihilator: "value at p must be a unit".into(),
            });
        }
        let m = value_at_p.ring().p() as i64 - 1;
        Ok(Character {
            value_at_p,
            tame: tame.rem_euclid(m),
            weight,
            domain: Domain::QpTimes,
        })
    }

    /// The trivial character.
    pub fn trivial(ring: &Arc<CoeffRing<K>>) -> Self {
        Character {
            value_at_p: ring.one(),
            tame: 0,
            weight: ring.zero(),
            domain: Domain::QpTimes,
        }
    }

    /// The character `x ↦ x^k`.
    pub fn x_power(ring: &Arc<CoeffRing<K>>, k: i64) -> Self {
        let p = BigRational::from_integer(BigInt::from(ring.p()));
        let vp = if k >= 0 {
            num_traits::pow(p, k as usize)
        } else {
            num_traits::pow(p, (-k) as usize).recip()
        };
        Character {
            value_at_p: ring.rational(&vp),
            tame: k.rem_euclid(ring.p() as i64 - 1),
            weight: ring.int(k),
            domain: Domain::QpTimes,
        }
    }

    /// The cyclotomic character `χ(x) = x|x|`.
    pub fn chi(ring: &Arc<CoeffRing<K>>) -> Self {
        Character {
            value_at_p: ring.one(),
            tame: 1 % (ring.p() as i64 - 1),
            weight: ring.one(),
            domain: Domain::QpTimes,
        }
    }

    /// The coefficient ring.
    pub fn ring(&self) -> &Arc<CoeffRing<K>> {
        self.value_at_p.ring()
    }

    /// The prime.
    pub fn p(&self) -> u32 {
        self.ring().p()
    }

    /// `δ(p)`.
    pub fn value_at_p(&self) -> &CoeffElement<K> {
        &self.value_at_p
    }

    /// Tame index `i` (mod `p − 1`).
    pub fn tame(&self) -> i64 {
        self.tame
    }

    /// Weight `κ(δ) = δ′(1)`.
    pub fn weight(&self) -> &CoeffElement<K> {
        &self.weight
    }

    /// Domain tag.
    pub fn domain(&self) -> Domain {
        self.domain
    }

    /// The restriction to ℤₚ^×.
    pub fn restrict_to_units(&self) -> Self {
        Character {
            domain: Domain::ZpUnits,
            ..self.clone()
        }
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Self) -> Self {
        let m = self.p() as i64 - 1;
        Character {
            value_at_p: self.value_at_p.clone() * other.value_at_p.clone(),
            tame: (self.tame + other.tame).rem_euclid(m),
            weight: self.weight.clone() + other.weight.clone(),
            domain: if self.domain == other.domain {
                self.domain
            } else {
                Domain::ZpUnits
            },
        }
    }

    /// Inverse character.
    pub fn inv(&self) -> Self {
        let m = self.p() as i64 - 1;
        Character {
            value_at_p: self.value_at_p.inverse().expect("value at p is a unit"),
            tame: (-self.tame).rem_euclid(m),
            weight: -self.weight.clone(),
            domain: self.domain,
        }
    }

    /// Quotient `self · other⁻¹`.
    pub fn div(&self, other: &Self) -> Self {
        self.mul(&other.inv())
    }

    /// Image in the reduced ring (pointwise reduction over dual numbers).
    pub fn residue_reduce(&self) -> Self {
        Character {
            value_at_p: self.value_at_p.residue_reduce(),
            tame: self.tame,
            weight: self.weight.residue_reduce(),
            domain: self.domain,
        }
    }

    /// Evaluate at an integer.
    pub fn eval_int(&self, n: i64) -> Result<CoeffElement<K>> {
        self.eval(&K::from_int(n))
    }

    /// Evaluate at a rational number.
    pub fn eval_rational(&self, q: &BigRational) -> Result<CoeffElement<K>> {
        self.eval(&K::from_rational(q))
    }

    /// Evaluate `δ(u)` for `u ∈ ℚₚ^×` through `u = p^v · ω(u₀) · ⟨u₀⟩`.
    ///
    /// Exact values are returned whenever the character is `u ↦ u^k` on units
    /// and `u` is exact; otherwise the Teichmüller/log/exp route runs at the
    /// ring's working precision (which requires p-adic scalars).
    pub fn eval(&self, u: &K) -> Result<CoeffElement<K>> {
        let p = self.p();
        let ring = Arc::clone(self.ring());
        let prec = ring.precision();
        if u.is_zero_elem() {
            return Err(Error::IndistinguishableFromZero(u.valuation(p).or_cap(0)));
        }
        let v = u.valuation(p).or_cap(0);
        if v != 0 && self.domain == Domain::ZpUnits {
            return Err(Error::InvalidArgument(
                "character of the units evaluated at a non-unit".into(),
            ));
        }
        let pv = K::from_int(p as i64).pow_i(v)?;
        let u0 = u.clone() * pv.try_inverse()?;
        let at_p = self.value_at_p.pow_i(v)?;

        // Exact fast path: δ = u^k on units.
        if let (Some(k), Some(u0q)) = (integer_value(&self.weight), u0.to_rational()) {
            if (self.tame - k).rem_euclid(p as i64 - 1) == 0 {
                let val = ring.rational(&pow_rational(&u0q, k));
                return Ok(at_p * val);
            }
        }

        let u0p = u0.to_padic(p, prec);
        let omega = u0p.teichmuller(p, prec)?;
        let principal = u0p * omega.try_inverse()?;
        let log = principal.log1(p, prec)?;
        let tame_val = omega.pow_i(self.tame)?;
        let tame_k = K::from_padic(&tame_val)
            .ok_or_else(|| Error::NotRational("Teichmüller value needs p-adic scalars".into()))?;
        let log_k = K::from_padic(&log)
            .ok_or_else(|| Error::NotRational("p-adic logarithm needs p-adic scalars".into()))?;
        let y = self.weight.scale(&log_k);
        let e = exp_ring(&y, p, prec)?;
        Ok(at_p * e.scale(&tame_k))
    }

    /// Whether the character is `x^k` at every point, returning `k`.
    pub fn as_x_power(&self) -> Option<i64> {
        let k = integer_value(&self.weight)?;
        let candidate = Character::x_power(self.ring(), k);
        (self.matches(&candidate)).then_some(k)
    }

    fn matches(&self, other: &Self) -> bool {
        self.tame == other.tame
            && (self.weight.clone() - other.weight.clone()).is_zero_elem()
            && (self.domain == Domain::ZpUnits
                || (self.value_at_p.clone() - other.value_at_p.clone()).is_zero_elem())
    }

    /// Regularity: pointwise never `x^{−i}` nor `χx^{i}` for `0 ≤ i ≤ i_max`.
    pub fn is_regular(&self, i_max: i64) -> Regularity {
        let point = self.residue_reduce();
        let point_name = match self.ring().kind() {
            RingKind::Dual(_) => "reduction modulo eps",
            RingKind::Extension(_) => "the extension field",
            RingKind::BaseField => "the base field",
        };
        // Certified shortcut: weights outside Z ∩ [−i_max, i_max + 1] cannot match.
        if let Some(w) = point.weight.as_rational() {
            if !w.is_integer() {
                return Regularity::Regular;
            }
        }
        let ring = Arc::clone(point.ring());
        for i in 0..=i_max {
            if point.matches(&Character::x_power(&ring, -i)) {
                return Regularity::Fails {
                    i,
                    form: IrregularForm::XInverse,
                    point: point_name.into(),
                };
            }
            if point.matches(&Character::chi(&ring).mul(&Character::x_power(&ring, i))) {
                return Regularity::Fails {
                    i,
                    form: IrregularForm::ChiX,
                    point: point_name.into(),
                };
            }
        }
        Regularity::Regular
    }
}

fn pow_rational(q: &BigRational, k: i64) -> BigRational {
    if k >= 0 {
        num_traits::pow(q.clone(), k as usize)
    } else {
        num_traits::pow(q.recip(), (-k) as usize)
    }
}

/// The integer value of an element, if it is an exact integer multiple of 1.
pub fn integer_value<K: Scalar>(a: &CoeffElement<K>) -> Option<i64> {
    let q = a.as_rational()?;
    if q.is_integer() {
        i64::try_from(q.to_integer()).ok()
    } else {
        None
    }
}

/// The exponential series `Σ yⁿ/n!` in a coefficient ring, for `v(y) ≥ 1`.
pub fn exp_ring<K: Scalar>(y: &CoeffElement<K>, p: u32, prec: u32) -> Result<CoeffElement<K>> {
    let vy = match y.val() {
        Val::Inf => return Ok(y.ring().one()),
        Val::Fin(v) => v,
    };
    if vy < 1 {
        return Err(Error::NonConvergence(format!(
            "exp(kappa * log u) needs valuation >= 1, estimate {vy}"
        )));
    }
    let mut acc = y.ring().one();
    let mut term = y.ring().one();
    let mut n: i64 = 1;
    let pm1 = p as i64 - 1;
    while n * vy * pm1 - (n - 1) < (prec as i64 + 1) * pm1 {
        term = term * y.clone() * y.ring().rational(&BigRational::new(BigInt::one(), n.into()));
        acc = acc + term.clone();
        n += 1;
    }
    Ok(round_element(&acc, p, prec as i64))
}

/// Round every coordinate to absolute precision `abs` (no-op on exact scalars that stay exact).
pub fn round_element<K: Scalar>(a: &CoeffElement<K>, p: u32, abs: i64) -> CoeffElement<K> {
    let coords: Vec<K> = a
        .coords()
        .iter()
        .map(|c| match c.to_rational() {
            Some(_) => c.clone(),
            None => K::from_padic(&c.to_padic(p, 0).round_abs(p, abs)).unwrap_or_else(|| c.clone()),
        })
        .collect();
    a.ring().element(coords).expect("same dimension")
}

/// Textual/JSON specification of a character: `{p_value, tame_index, weight}`.
///
/// Values are either a rational string (`"1/5"`, `"6"`), a linear expression in
/// the ring generator (`"1+eps"`, `"2 - 3*eps"`, `"y"`), or an array of
/// rational coordinate strings in the canonical basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacterSpec {
    /// Value at `p`.
    pub p_value: serde_json::Value,
    /// Tame index `i` (`δ = ω^i` on roots of unity).
    pub tame_index: i64,
    /// Weight `κ`.
    pub weight: serde_json::Value,
}

impl CharacterSpec {
    /// Build the character in the given ring.
    pub fn build<K: Scalar>(&self, ring: &Arc<CoeffRing<K>>) -> Result<Character<K>> {
        let vp = parse_element(&self.p_value, ring)?;
        let w = parse_element(&self.weight, ring)?;
        Character::new(vp, self.tame_index, w)
    }

    /// The spec of `x^k`.
    pub fn x_power(p: u32, k: i64) -> Self {
        let val = if k >= 0 {
            format!("{}", BigInt::from(p).pow(k as u32))
        } else {
            format!("1/{}", BigInt::from(p).pow((-k) as u32))
        };
        CharacterSpec {
            p_value: serde_json::Value::String(val),
            tame_index: k.rem_euclid(p as i64 - 1),
            weight: serde_json::Value::String(k.to_string()),
        }
    }
}

/// Parse a ring element from a JSON value (see [`CharacterSpec`]).
pub fn parse_element<K: Scalar>(v: &serde_json::Value, ring: &Arc<CoeffRing<K>>) -> Result<CoeffElement<K>> {
    match v {
        serde_json::Value::Number(n) => {
            let q = parse_rational(&n.to_string())?;
            Ok(ring.rational(&q))
        }
        serde_json::Value::String(s) => parse_expression(s, ring),
        serde_json::Value::Array(items) => {
            if items.len() != ring.dim() {
                return Err(Error::Parse(format!(
                    "expected {} coordinates, got {}",
                    ring.dim(),
                    items.len()
                )));
            }
            let coords = items
                .iter()
                .map(|x| match x {
                    serde_json::Value::String(s) => parse_rational(s).map(|q| K::from_rational(&q)),
                    serde_json::Value::Number(n) => parse_rational(&n.to_string()).map(|q| K::from_rational(&q)),
                    _ => Err(Error::Parse(format!("bad coordinate {x}"))),
                })
                .collect::<Result<Vec<K>>>()?;
            ring.element(coords)
        }
        _ => Err(Error::Parse(format!("cannot parse ring element from {v}"))),
    }
}

/// Parse a rational number such as `-3/7` or `12`.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("malformed rational '{s}'"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        Ok(BigRational::new(n, d))
    } else {
        let n: BigInt = s.parse().map_err(|_| bad())?;
        Ok(BigRational::from_integer(n))
    }
}

fn parse_expression<K: Scalar>(s: &str, ring: &Arc<CoeffRing<K>>) -> Result<CoeffElement<K>> {
    let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if compact.is_empty() {
        return Err(Error::Parse("empty ring element".into()));
    }
    // Split into signed terms.
    let mut terms = Vec::new();
    let mut cur = String::new();
    for (idx, ch) in compact.char_indices() {
        if (ch == '+' || ch == '-') && idx > 0 && !compact[..idx].ends_with(['/', '^', '*']) {
            terms.push(std::mem::take(&mut cur));
        }
        cur.push(ch);
    }
    terms.push(cur);
    let mut acc = ring.zero();
    for t in terms {
        let (sign, body) = match t.strip_prefix('-') {
            Some(b) => (-1, b.to_string()),
            None => (1, t.trim_start_matches('+').to_string()),
        };
        let (coef, gen_pow) = split_term(&body)?;
        let coef = coef * BigRational::from_integer(sign.into());
        let elem = match gen_pow {
            0 => ring.rational(&coef),
            k => {
                if k >= ring.dim() {
                    return Err(Error::Parse(format!("generator power {k} exceeds ring dimension")));
                }
                if matches!(ring.kind(), RingKind::BaseField) {
                    return Err(Error::Parse("generator used in the base field".into()));
                }
                ring.basis(k).scale(&K::from_rational(&coef))
            }
        };
        acc = acc + elem;
    }
    Ok(acc)
}

fn split_term(body: &str) -> Result<(BigRational, usize)> {
    let gens = ["eps", "y"];
    for g in gens {
        if let Some(pos) = body.find(g) {
            let before = &body[..pos];
            let after = &body[pos + g.len()..];
            let coef = match before.strip_suffix('*') {
                None if before.is_empty() => BigRational::one(),
                None => parse_rational(before)?,
                Some("") => return Err(Error::Parse(format!("malformed term '{body}'"))),
                Some(c) => parse_rational(c)?,
            };
            let k = if after.is_empty() {
                1
            } else if let Some(e) = after.strip_prefix('^') {
                e.parse::<usize>().map_err(|_| Error::Parse(format!("bad exponent in '{body}'")))?
            } else {
                return Err(Error::Parse(format!("malformed term '{body}'")));
            };
            return Ok((coef, k));
        }
    }
    Ok((parse_rational(body)?, 0))
}

/// Valuation of a rational at `p` (re-exported for regularity reports).
pub fn rational_val(q: &BigRational, p: u32) -> Val {
    rational_valuation(q, p)
}

/// Convert a p-adic number into the scalar type, failing on the exact-only path.
pub fn padic_into<K: Scalar>(x: &PAdic) -> Result<K> {
    K::from_padic(x).ok_or_else(|| Error::NotRational(format!("{x} is not exact")))
}

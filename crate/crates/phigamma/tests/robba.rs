//! Truncated Robba-ring arithmetic and operators, checked against independent
//! expansions (binomial series, geometric series, telescoping sums).

use num_bigint::BigInt;
use num_rational::BigRational;
use phigamma::coefficients::{binom_rational, rat, rint, CoeffRing};
use phigamma::poly::{LaurentPoly, Poly};
use phigamma::robba::{AnnulusValuation, CycloFrac, ExpPoly, RobbaElement, Window};
use phigamma::{Error, Rat, Ring, Val};
use proptest::prelude::*;

fn q(n: i64) -> Rat {
    rint(n)
}

fn win(lo: i64, hi: i64) -> Window {
    Window::new(lo, hi).unwrap()
}

fn series(p: u32, cap: Window, lo: i64, coeffs: &[i64]) -> RobbaElement<Rat> {
    RobbaElement::from_coeffs(p, cap, lo, coeffs.iter().map(|&c| q(c)).collect(), &q(0)).unwrap()
}

fn laurent(lo: i64, coeffs: &[i64]) -> LaurentPoly<Rat> {
    LaurentPoly {
        offset: lo,
        poly: Poly::new(coeffs.iter().map(|&c| q(c)).collect(), &q(0)),
    }
    .normalized()
}

fn assert_agree(f: &RobbaElement<Rat>, g: &RobbaElement<Rat>) {
    assert_eq!(f.defect(g), Val::Inf, "series disagree:\n{f:?}\n{g:?}");
}

#[test]
fn t_times_t_inverse_is_one() {
    let cap = win(-4, 4);
    let t = series(5, cap, 1, &[1]);
    let ti = series(5, cap, -1, &[1]);
    let prod = t.mul(&ti).unwrap();
    assert!(prod.is_exact());
    assert_eq!(prod.to_laurent("test").unwrap(), laurent(0, &[1]));
}

#[test]
fn square_of_one_plus_t() {
    let cap = win(-2, 6);
    let f = series(5, cap, 0, &[1, 1]);
    let g = f.mul(&f).unwrap();
    assert_eq!(g.to_laurent("test").unwrap(), laurent(0, &[1, 2, 1]));
}

#[test]
fn telescoping_geometric_series() {
    // (Σ Tⁿ)(1 − T) = 1, with the top of the window unknown.
    let cap = win(0, 8);
    let geom = RobbaElement::power_series_prefix(5, cap, vec![q(1); 9], &q(0)).unwrap();
    let one_minus_t = series(5, cap, 0, &[1, -1]);
    let prod = geom.mul(&one_minus_t).unwrap();
    assert!(prod.tail_high());
    assert_eq!(prod.coeff(0), Some(q(1)));
    for n in 1..=prod.known_range().1 {
        assert_eq!(prod.coeff(n), Some(q(0)), "coefficient {n}");
    }
    assert!(prod.known_range().1 >= 7);
}

#[test]
fn frobenius_examples_p3() {
    let cap = win(-3, 9);
    let t = series(3, cap, 1, &[1]);
    assert_eq!(t.phi().unwrap().to_laurent("test").unwrap(), laurent(1, &[3, 3, 1]));
    let one_plus_t = series(3, cap, 0, &[1, 1]);
    assert_eq!(
        one_plus_t.phi().unwrap().to_laurent("test").unwrap(),
        laurent(0, &[1, 3, 3, 1])
    );
    let c = series(3, cap, 0, &[7]);
    assert_eq!(c.phi().unwrap().to_laurent("test").unwrap(), laurent(0, &[7]));
}

#[test]
fn frobenius_of_negative_power() {
    // φ(T⁻¹) = 1/((1+T)^p − 1) = T^{−p}(1 + Σ_{m≥1} binom(p, m) T^{−m})^{−1}, expanded
    // towards the boundary of the annulus: infinitely many negative powers.
    let cap = win(-12, 6);
    let ti = series(5, cap, -1, &[1]);
    let f = ti.phi().unwrap();
    assert!(f.tail_low());
    assert!(!f.tail_high());
    assert_eq!(f.coeff(-5), Some(q(1)));
    assert_eq!(f.coeff(-6), Some(q(-5)));
    for n in -4..=6 {
        assert_eq!(f.coeff(n), Some(q(0)));
    }
    // φ(T⁻¹)·φ(T) = 1 wherever the product is known.
    let phi_t = series(5, cap, 1, &[5, 10, 10, 5, 1]);
    let prod = f.mul(&phi_t).unwrap();
    assert_eq!(prod.coeff(0), Some(q(1)));
    let (lo, hi) = prod.known_range();
    assert!(lo <= -6);
    for n in lo..=hi {
        if n != 0 {
            assert_eq!(prod.coeff(n), Some(q(0)), "coefficient {n}");
        }
    }
}

#[test]
fn sigma_examples() {
    let cap = win(-2, 10);
    let f = series(5, cap, -1, &[2, 1, 3, 1]);
    let id = f.sigma(&q(1)).unwrap();
    assert_eq!(id.coeff(-1), Some(q(2)));
    assert_eq!(id.coeff(2), Some(q(1)));
    let t = series(5, cap, 1, &[1]);
    assert_eq!(t.sigma(&q(2)).unwrap().to_laurent("test").unwrap(), laurent(1, &[2, 1]));
    // σ_{1+p}(1+T) = (1+T)^{6}; oracle: polynomial power.
    let one_plus_t = series(5, cap, 0, &[1, 1]);
    let image = one_plus_t.sigma(&q(6)).unwrap();
    let oracle = Poly::new(vec![q(1), q(1)], &q(0)).pow(6);
    for n in 0..=10 {
        assert_eq!(image.coeff(n), Some(oracle.coeff(n as usize)), "coefficient {n}");
    }
    // A non-integral unit produces an infinite series.
    let inv = one_plus_t.sigma(&rat(1, 2)).unwrap();
    assert!(inv.tail_high());
    for n in 0..=10 {
        assert_eq!(inv.coeff(n), Some(binom_rational(&rat(1, 2), n as usize)));
    }
    assert!(matches!(t.sigma(&q(5)), Err(Error::InvalidArgument(_))));
}

#[test]
fn psi_examples() {
    let cap = win(-4, 8);
    let one = series(5, cap, 0, &[1]);
    assert_eq!(one.psi().unwrap().to_laurent("test").unwrap(), laurent(0, &[1]));
    let x5 = series(5, cap, 0, &[1, 5, 10, 10, 5, 1]);
    assert_eq!(x5.psi().unwrap().to_laurent("test").unwrap(), laurent(0, &[1, 1]));
    let t = series(5, cap, 1, &[1]);
    assert_eq!(t.psi().unwrap().to_laurent("test").unwrap(), laurent(0, &[-1]));
}

#[test]
fn psi_needs_exact_input() {
    let cap = win(0, 6);
    let geom = RobbaElement::power_series_prefix(5, cap, vec![q(1); 7], &q(0)).unwrap();
    assert!(matches!(geom.psi(), Err(Error::WindowOverflow { .. })));
}

#[test]
fn partial_examples() {
    let cap = win(-4, 8);
    let t = series(5, cap, 1, &[1]);
    assert_eq!(t.partial().unwrap().to_laurent("test").unwrap(), laurent(0, &[1, 1]));
    let x3 = series(5, cap, 0, &[1, 3, 3, 1]);
    assert_eq!(x3.partial().unwrap().to_laurent("test").unwrap(), laurent(0, &[3, 9, 9, 3]));
    let ti = series(5, cap, -1, &[1]);
    assert_eq!(ti.partial().unwrap().to_laurent("test").unwrap(), laurent(-2, &[-1, -1]));
}

#[test]
fn nabla_is_t_times_partial() {
    let cap = win(0, 8);
    let x2 = series(5, cap, 0, &[1, 2, 1]);
    let n = x2.nabla().unwrap();
    // ∇(1+T)² = 2 log(1+T) (1+T)²; oracle from the log series.
    let log: Vec<Rat> = (0..=8)
        .map(|k| if k == 0 { q(0) } else { BigRational::new(BigInt::from(if k % 2 == 1 { 2 } else { -2 }), BigInt::from(k)) })
        .collect();
    let sq = [q(1), q(2), q(1)];
    for m in 0..=8usize {
        let mut acc = q(0);
        for (i, s) in sq.iter().enumerate() {
            if i <= m {
                acc += s * &log[m - i];
            }
        }
        assert_eq!(n.coeff(m as i64), Some(acc), "coefficient {m}");
    }
}

#[test]
fn residue_examples() {
    let cap = win(-4, 6);
    assert_eq!(series(5, cap, -1, &[1]).res0().unwrap(), q(1));
    assert_eq!(series(5, cap, 0, &[3, 1, 4]).res0().unwrap(), q(0));
    // T⁻¹ (1+T)⁻¹ via an independently truncated geometric series.
    let inv: Vec<Rat> = (0..=6).map(|n| q(if n % 2 == 0 { 1 } else { -1 })).collect();
    let g = RobbaElement::power_series_prefix(5, cap, inv, &q(0)).unwrap();
    let f = series(5, cap, -1, &[1]).mul(&g).unwrap();
    assert_eq!(f.res0().unwrap(), q(1));
}

#[test]
fn residue_needs_known_coefficient() {
    let cap = win(-4, 6);
    let f = series(5, cap, -1, &[1]).phi().unwrap(); // unknown below the window
    let g = RobbaElement::from_fn(5, cap, |n| (n >= 0).then(|| q(1)), phigamma::robba::Beyond::Unknown, phigamma::robba::Beyond::Zero, &q(0)).unwrap();
    assert!(f.res0().is_ok());
    assert!(matches!(g.res0(), Err(Error::WindowOverflow { .. })));
}

#[test]
fn restriction_examples() {
    let cap = win(-4, 8);
    let x = series(5, cap, 0, &[1, 1]);
    let r0 = x.restrict(0, 1).unwrap();
    assert!(r0.to_laurent("test").unwrap().is_zero());
    let r1 = x.restrict(1, 1).unwrap();
    assert_eq!(r1.to_laurent("test").unwrap(), laurent(0, &[1, 1]));
}

#[test]
fn split_examples() {
    let cap = win(-3, 3);
    let f = series(5, cap, -1, &[1, 1, 1]);
    let (plus, minus) = f.split();
    assert_eq!(plus.to_laurent("test").unwrap(), laurent(0, &[1, 1]));
    assert_eq!(minus.to_laurent("test").unwrap(), laurent(-1, &[1]));
    let g = series(5, cap, 0, &[2, 5]);
    let (gp, gm) = g.split();
    assert_eq!(gp.to_laurent("test").unwrap(), g.to_laurent("test").unwrap());
    assert!(gm.to_laurent("test").unwrap().is_zero());
    // ∂ of a minus part is again a minus part.
    let (_, dm) = minus.partial().unwrap().split();
    assert_eq!(dm.to_laurent("test").unwrap(), laurent(-2, &[-1, -1]));
    assert!(minus.partial().unwrap().split().0.to_laurent("test").unwrap().is_zero());
}

#[test]
fn annulus_valuation() {
    let cap = win(-2, 4);
    // f = p + T + p T⁻¹ with p = 5, on [1/4, 1]:
    // terms: v=1 at 0 → 1; T → min(1/4, 1) = 1/4; 5T⁻¹ → min(1 − 1/4, 1 − 1) = 0.
    let f = series(5, cap, -1, &[5, 5, 1]);
    let v = AnnulusValuation::new(rat(1, 4), q(1)).unwrap();
    assert_eq!(v.eval(&f).unwrap(), Some(q(0)));
    assert_eq!(AnnulusValuation::r_n(5, 1), rat(1, 4));
    assert_eq!(AnnulusValuation::r_n(5, 2), rat(1, 20));
    assert!(AnnulusValuation::new(q(1), rat(1, 2)).is_err());
    let geom = RobbaElement::power_series_prefix(5, cap, vec![q(1); 3], &q(0)).unwrap();
    assert!(v.eval(&geom).is_err());
}

#[test]
fn dual_number_coefficients() {
    let ring = CoeffRing::<Rat>::dual(5, 20, 2).unwrap();
    let eps = ring.basis(1);
    let cap = win(-2, 6);
    let f = RobbaElement::from_coeffs(5, cap, 0, vec![ring.one(), eps.clone()], &ring.zero()).unwrap();
    let sq = f.mul(&f).unwrap();
    assert_eq!(sq.coeff(1), Some(eps.clone() + eps.clone()));
    assert!(sq.coeff(2).unwrap().is_zero_elem());
}

#[test]
fn json_view() {
    let cap = win(-1, 3);
    let f = series(5, cap, -1, &[1, 2]);
    let j = f.to_json(|c| c.to_string());
    assert_eq!(j.known, (-1, 3));
    assert!(!j.tail_low && !j.tail_high);
    let text = serde_json::to_string(&j).unwrap();
    assert!(text.contains("\"coeffs\":[\"1\",\"2\",\"0\",\"0\",\"0\"]"), "{text}");
}

#[test]
fn cyclo_psi_phi_with_poles() {
    // ψ∘φ = id on the exact model, for a series with negative powers.
    let f = laurent(-3, &[1, -2, 0, 4, 1]);
    let c = CycloFrac::from_laurent_t(5, &f);
    let back = c.phi().psi();
    let cap = win(-6, 6);
    let lhs = back.to_window(cap).unwrap();
    let rhs = RobbaElement::from_laurent(5, cap, &f).unwrap();
    assert_agree(&lhs, &rhs);
    assert!(back.sub(&c).reduce().is_zero());
}

#[test]
fn exppoly_matches_windowed_operators() {
    let cap = win(0, 10);
    let z = q(0);
    let f = ExpPoly::monomial(5, q(3), 0, q(2))
        .unwrap()
        .add(&ExpPoly::monomial(5, q(-1), 1, q(1)).unwrap());
    let w = f.to_window(cap).unwrap();
    assert_agree(&f.phi().to_window(cap).unwrap(), &w.phi().unwrap());
    assert_agree(&f.partial().to_window(cap).unwrap(), &w.partial().unwrap());
    assert_agree(&f.sigma(&q(2)).unwrap().to_window(cap).unwrap(), &w.sigma(&q(2)).unwrap());
    assert_agree(&f.nabla().to_window(cap).unwrap(), &w.nabla().unwrap());
    // ψ on an exact element: ψ((1+T)^{10}) = (1+T)^2.
    let g = ExpPoly::dirac(5, q(10), &z).unwrap();
    assert_agree(&g.psi().to_window(cap).unwrap(), &g.to_window(cap).unwrap().psi().unwrap());
    assert_eq!(g.psi(), ExpPoly::dirac(5, q(2), &z).unwrap());
}

#[test]
fn exppoly_w_star_is_an_involution() {
    let f = ExpPoly::monomial(5, q(2), 3, q(2))
        .unwrap()
        .add(&ExpPoly::monomial(5, q(1), 1, rat(3, 7)).unwrap());
    let w = f.w_star().unwrap();
    assert_eq!(w.w_star().unwrap(), f);
    assert!(ExpPoly::dirac(5, q(5), &q(0)).unwrap().w_star().is_err());
}

#[test]
fn exppoly_w_star_against_jets() {
    // ∫ g d(w_* μ) = ∫ g(1/x) dμ for g(x) = x^m, checked on a derivative of a Dirac.
    let a = rat(3, 2);
    let mu = ExpPoly::monomial(5, q(1), 2, a.clone()).unwrap();
    let w = mu.w_star().unwrap();
    for m in 0..5i64 {
        // jets of x^m
        let jet = |x: &Rat, k: u32| -> phigamma::Result<Rat> {
            let mut c = q(1);
            for i in 0..k as i64 {
                c *= q(m - i);
            }
            Ok(if (k as i64) > m { q(0) } else { c * num_traits::pow(x.clone(), (m - k as i64) as usize) })
        };
        let lhs = w.integrate(jet).unwrap();
        // (x^{-m})'' at a = m(m+1) a^{-m-2}.
        let rhs = q(m * (m + 1)) * num_traits::pow(a.recip(), (m + 2) as usize);
        assert_eq!(lhs, rhs, "m = {m}");
    }
}

fn arb_laurent() -> impl Strategy<Value = LaurentPoly<Rat>> {
    (-3i64..=0, prop::collection::vec(-6i64..=6, 1..6)).prop_map(|(lo, c)| laurent(lo, &c))
}

fn arb_plus() -> impl Strategy<Value = LaurentPoly<Rat>> {
    prop::collection::vec(-6i64..=6, 1..4).prop_map(|c| laurent(0, &c))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn restrictions_sum_to_identity(f in arb_laurent()) {
        let cap = win(-8, 8);
        let x = RobbaElement::from_laurent(5, cap, &f).unwrap();
        let mut acc = RobbaElement::zero(5, cap, &q(0));
        for i in 0..5 {
            acc = acc.add(&x.restrict(i, 1).unwrap()).unwrap();
        }
        prop_assert_eq!(acc.defect(&x), Val::Inf);
        prop_assert!(acc.known_range().0 <= -3);
    }

    #[test]
    fn restrictions_idempotent_and_orthogonal(f in arb_laurent(), i in 0i64..5, j in 0i64..5) {
        let c = CycloFrac::from_laurent_t(5, &f);
        let ri = c.restrict(i, 1).unwrap();
        prop_assert!(ri.restrict(i, 1).unwrap().sub(&ri).reduce().is_zero());
        let rij = ri.restrict(j, 1).unwrap().reduce();
        prop_assert_eq!(rij.is_zero(), i != j || ri.clone().reduce().is_zero());
    }

    #[test]
    fn psi_of_phi_is_identity(f in arb_plus()) {
        let cap = win(-2, 16);
        let x = RobbaElement::from_laurent(5, cap, &f).unwrap();
        let y = x.phi().unwrap().psi().unwrap();
        prop_assert_eq!(y.defect(&x), Val::Inf);
        prop_assert!(y.is_exact());
    }

    #[test]
    fn psi_kills_exactly_unit_supported(f in arb_laurent()) {
        let cap = win(-8, 8);
        let x = RobbaElement::from_laurent(5, cap, &f).unwrap();
        let u = x.sub(&x.restrict(0, 1).unwrap()).unwrap(); // Res_{ℤₚ^×}
        let c = CycloFrac::from_laurent_t(5, &f);
        let cu = c.sub(&c.restrict(0, 1).unwrap());
        prop_assert!(cu.psi().reduce().is_zero());
        prop_assert_eq!(u.known_range().0 <= -3, true);
    }

    #[test]
    fn sigma_is_multiplicative(f in arb_plus(), a in prop::sample::select(vec![1i64, 2, 3, 4, 6, -1, -2])) {
        let cap = win(0, 10);
        let x = RobbaElement::from_laurent(5, cap, &f).unwrap();
        let b = 3i64;
        let lhs = x.sigma(&q(b)).unwrap().sigma(&q(a)).unwrap();
        let rhs = x.sigma(&q(a * b)).unwrap();
        prop_assert_eq!(lhs.defect(&rhs), Val::Inf);
        prop_assert!(lhs.known_range().1 >= 10 && rhs.known_range().1 >= 10);
    }

    #[test]
    fn sigma_with_negative_powers(f in arb_laurent(), a in prop::sample::select(vec![2i64, 3, -1])) {
        let cap = win(-4, 10);
        let x = RobbaElement::from_laurent(5, cap, &f).unwrap();
        let lhs = x.sigma(&q(2)).unwrap().sigma(&q(a)).unwrap();
        let rhs = x.sigma(&q(2 * a)).unwrap();
        prop_assert_eq!(lhs.defect(&rhs), Val::Inf);
    }

    #[test]
    fn phi_commutes_with_sigma(f in arb_plus(), a in prop::sample::select(vec![2i64, 3, -1])) {
        let cap = win(0, 12);
        let x = RobbaElement::from_laurent(5, cap, &f).unwrap();
        let lhs = x.sigma(&q(a)).unwrap().phi().unwrap();
        let rhs = x.phi().unwrap().sigma(&q(a)).unwrap();
        prop_assert_eq!(lhs.defect(&rhs), Val::Inf);
    }

    #[test]
    fn twisted_commutations_of_partial(f in arb_laurent(), a in prop::sample::select(vec![2i64, 3, -1])) {
        let cap = win(-6, 12);
        let x = RobbaElement::from_laurent(5, cap, &f).unwrap();
        // ∂σ_a = a σ_a ∂
        let lhs = x.sigma(&q(a)).unwrap().partial().unwrap();
        let rhs = x.partial().unwrap().sigma(&q(a)).unwrap().scale(&q(a));
        prop_assert_eq!(lhs.defect(&rhs), Val::Inf);
        // ∂φ = p φ∂
        let lhs = x.phi().unwrap().partial().unwrap();
        let rhs = x.partial().unwrap().phi().unwrap().scale(&q(5));
        prop_assert_eq!(lhs.defect(&rhs), Val::Inf);
    }

    #[test]
    fn partial_is_a_derivation(f in arb_laurent(), g in arb_laurent()) {
        let cap = win(-8, 8);
        let x = RobbaElement::from_laurent(5, cap, &f).unwrap();
        let y = RobbaElement::from_laurent(5, cap, &g).unwrap();
        let lhs = x.mul(&y).unwrap().partial().unwrap();
        let rhs = x.partial().unwrap().mul(&y).unwrap().add(&x.mul(&y.partial().unwrap()).unwrap()).unwrap();
        prop_assert_eq!(lhs.defect(&rhs), Val::Inf);
    }

    #[test]
    fn exppoly_psi_phi(a in -20i64..20, k in 0u32..3, c in -5i64..5) {
        let f = ExpPoly::monomial(5, q(c), k, q(a)).unwrap();
        prop_assert_eq!(f.phi().psi(), f.clone());
        prop_assert_eq!(f.phi().partial(), f.partial().phi().scale(&q(5)));
        let g = f.sigma(&q(3)).unwrap().sigma(&rat(1, 3)).unwrap();
        prop_assert_eq!(g, f);
    }
}

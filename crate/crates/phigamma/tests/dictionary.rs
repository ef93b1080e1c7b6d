//! Amice/Colmez transforms, the residue pairing and ψ on functions.

use num_rational::BigRational;
use phigamma::coefficients::{binom_rational, rat, rint};
use phigamma::dictionary::{
    colmez, colmez_exact, colmez_section, pair, pair_via_functions, Distribution, LocPolyFn,
};
use phigamma::poly::{LaurentPoly, Poly};
use phigamma::robba::{CycloFrac, RobbaElement, Window};
use phigamma::{Rat, Val};
use proptest::prelude::*;

const P: u32 = 5;

fn q(n: i64) -> Rat {
    rint(n)
}

fn win(lo: i64, hi: i64) -> Window {
    Window::new(lo, hi).unwrap()
}

fn series(cap: Window, lo: i64, coeffs: &[i64]) -> RobbaElement<Rat> {
    RobbaElement::from_coeffs(P, cap, lo, coeffs.iter().map(|&c| q(c)).collect(), &q(0)).unwrap()
}

fn poly(coeffs: &[i64]) -> Poly<Rat> {
    Poly::new(coeffs.iter().map(|&c| q(c)).collect(), &q(0))
}

fn laurent(lo: i64, coeffs: &[i64]) -> LaurentPoly<Rat> {
    LaurentPoly {
        offset: lo,
        poly: poly(coeffs),
    }
    .normalized()
}

#[test]
fn amice_examples() {
    let cap = win(-4, 8);
    let d0 = Distribution::dirac(&q(0), 8, &q(0));
    assert_eq!(d0.amice(P, cap).unwrap().to_laurent("t").unwrap(), laurent(0, &[1]));
    let d1 = Distribution::dirac(&q(1), 8, &q(0));
    assert_eq!(d1.amice(P, cap).unwrap().to_laurent("t").unwrap(), laurent(0, &[1, 1]));
    // x·δ₁ = δ₁ as a functional.
    let xd1 = d1.mul_x();
    assert_eq!(xd1.amice(P, cap).unwrap().to_laurent("t").unwrap(), laurent(0, &[1, 1]));
}

#[test]
fn amice_inverse_examples() {
    let cap = win(-2, 6);
    let one = Distribution::amice_inverse(&series(cap, 0, &[1])).unwrap();
    assert_eq!(one.moments()[0], q(1));
    assert!(one.moments()[1..].iter().all(|m| *m == q(0)));
    let sq = Distribution::amice_inverse(&series(cap, 0, &[1, 2, 1])).unwrap();
    assert_eq!(&sq.moments()[..4], &[q(1), q(2), q(1), q(0)]);
    let t = Distribution::amice_inverse(&series(cap, 1, &[1])).unwrap();
    assert_eq!(&t.moments()[..3], &[q(0), q(1), q(0)]);
    assert!(Distribution::amice_inverse(&series(cap, -1, &[1])).is_err());
    // Round trip.
    let f = series(cap, 0, &[3, -1, 4, 1, 5]);
    let back = Distribution::amice_inverse(&f).unwrap().amice(P, cap).unwrap();
    assert_eq!(back.defect(&f), Val::Inf);
}

#[test]
fn colmez_examples() {
    let cap = win(-6, 6);
    let c1 = colmez(&series(cap, -1, &[1]), 3).unwrap();
    assert!(c1.has_chi_inverse_twist());
    for x in 0..6 {
        assert_eq!(c1.eval(&q(x)).unwrap(), q(1));
    }
    assert!(colmez(&series(cap, 0, &[1, 7, 2]), 3).unwrap().is_zero());
    let c2 = colmez(&series(cap, -2, &[1]), 3).unwrap();
    assert_eq!(c2.classes()[0], poly(&[-1, -1]));
    assert!(colmez(&series(cap, -6, &[1]), 3).is_err());
}

#[test]
fn colmez_agrees_with_residue_definition() {
    // φ_f(x) = res₀((1+T)^{−x−1} f) for integers x ≥ 0, computed by windowed products.
    let cap = win(-8, 8);
    let f = series(cap, -4, &[2, -1, 3, 1, 5, 9]);
    let phi = colmez(&f, 4).unwrap();
    for x in 0..7i64 {
        let g = RobbaElement::one_plus_t_pow(P, cap, &q(-x - 1), &q(0)).unwrap();
        assert_eq!(g.mul(&f).unwrap().res0().unwrap(), phi.eval(&q(x)).unwrap(), "x = {x}");
    }
}

#[test]
fn colmez_exact_matches_window_at_level_zero() {
    let f = laurent(-3, &[1, -2, 5, 7]);
    let exact = colmez_exact(&CycloFrac::from_laurent_t(P, &f), 4).unwrap();
    let window = colmez(&RobbaElement::from_laurent(P, win(-6, 6), &f).unwrap(), 4).unwrap();
    assert_eq!(exact.level(), 0);
    assert!(exact.same_function(&window).unwrap());
}

#[test]
fn colmez_of_phi_is_extension_by_zero() {
    // φ_{φ(f)}(x) = 1_{pℤₚ}(x) φ_f(x/p).
    let f = laurent(-2, &[3, 1]);
    let cf = CycloFrac::from_laurent_t(P, &f);
    let lhs = colmez_exact(&cf.phi(), 3).unwrap();
    assert_eq!(lhs.level(), 1);
    let base = colmez_exact(&cf, 3).unwrap();
    for num in -12i64..12 {
        for den in [1i64, 2, 3, 7] {
            let x = rat(num, den);
            let expected = if num.rem_euclid(5) == 0 { base.eval(&(&x / q(5))).unwrap() } else { q(0) };
            assert_eq!(lhs.eval(&x).unwrap(), expected, "x = {x}");
        }
    }
}

#[test]
fn colmez_intertwines_psi() {
    // φ_{ψ(f)} = ψ(φ_f) on level-1 and level-2 inputs.
    for f in [laurent(-2, &[3, 1]), laurent(-3, &[1, 0, -4, 2])] {
        let cf = CycloFrac::from_laurent_t(P, &f);
        for g in [cf.phi(), cf.phi().phi().mul_x_power(3), cf.phi().mul_x_power(7)] {
            let lhs = colmez_exact(&g.psi(), 3).unwrap();
            let rhs = colmez_exact(&g, 3).unwrap().psi_fn();
            assert!(lhs.same_function(&rhs).unwrap());
        }
    }
}

#[test]
fn pairing_examples() {
    let cap = win(-6, 8);
    let d1 = Distribution::dirac(&q(1), 8, &q(0));
    assert_eq!(pair(&d1, &series(cap, -1, &[1])).unwrap(), q(1));
    let d0 = Distribution::dirac(&q(0), 8, &q(0));
    assert_eq!(pair(&d0, &series(cap, 0, &[2, 5, 1])).unwrap(), q(0));
    for a in [q(0), q(3), rat(1, 2), rat(-2, 3)] {
        let da = Distribution::dirac(&a, 8, &q(0));
        assert_eq!(pair(&da, &series(cap, -2, &[1])).unwrap(), -&a - q(1), "a = {a}");
    }
}

#[test]
fn pairing_identity_grid() {
    let cap = win(-8, 12);
    let points = [q(0), q(2), rat(1, 3), rat(-1, 2), q(-7)];
    for a in &points {
        let mu = Distribution::dirac(a, 12, &q(0));
        for k in 1..=5i64 {
            let f = series(cap, -k, &[1]);
            let lhs = pair(&mu, &f).unwrap();
            let rhs = pair_via_functions(&mu, &f, 5).unwrap();
            assert_eq!(lhs, rhs, "a = {a}, k = {k}");
            assert_eq!(rhs, binom_rational(&(-a - q(1)), (k - 1) as usize));
        }
    }
}

#[test]
fn psi_fn_examples() {
    let one = LocPolyFn::constant(P, q(1));
    assert_eq!(one.psi_fn(), one);
    let x = LocPolyFn::from_poly(P, 1, poly(&[0, 1])).unwrap();
    assert_eq!(x.psi_fn().classes()[0], poly(&[0, 5]));
    // 1_{ℤₚ^×}·x
    let polys = (0..5).map(|i| if i == 0 { poly(&[]) } else { poly(&[0, 1]) }).collect();
    let f = LocPolyFn::from_classes(P, 1, 1, polys).unwrap();
    assert!(f.psi_fn().is_zero());
}

#[test]
fn loc_poly_refinement_and_json() {
    let f = LocPolyFn::indicator_times(P, 2, 1, 2, &poly(&[1, 0, 1])).unwrap();
    let g = f.refine(2).unwrap();
    for x in -30i64..30 {
        assert_eq!(f.eval(&q(x)).unwrap(), g.eval(&q(x)).unwrap());
    }
    assert!(f.same_function(&g).unwrap());
    assert_eq!(f.jet(&q(2), 1).unwrap(), q(4));
    let j = f.to_json(|c| c.to_string());
    assert_eq!(j.classes.len(), 5);
    assert!(serde_json::to_string(&j).unwrap().contains("\"level\":1"));
    let d = Distribution::dirac(&q(2), 4, &q(0));
    assert!(serde_json::to_string(&d.to_json(|c| c.to_string())).unwrap().contains("\"truncated\":false"));
}

#[test]
fn colmez_section_is_a_right_inverse() {
    let cap = win(-6, 6);
    let target = LocPolyFn::from_poly(P, 4, poly(&[2, -3, 0, 1, 5])).unwrap();
    let f = colmez_section(&target, cap).unwrap();
    assert!(f.split().0.to_laurent("t").unwrap().is_zero());
    assert!(colmez(&f, 4).unwrap().same_function(&target).unwrap());
}

fn arb_moments() -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(-9i64..9, 2..12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn amice_intertwines_x_and_partial(m in arb_moments(), truncated in any::<bool>()) {
        let cap = win(0, 14);
        let mu = Distribution::new(m.iter().map(|&c| q(c)).collect(), truncated).unwrap();
        let lhs = mu.mul_x().amice(P, cap).unwrap();
        let rhs = mu.amice(P, cap).unwrap().partial().unwrap();
        prop_assert_eq!(lhs.defect(&rhs), Val::Inf);
        prop_assert_eq!(lhs.known_range(), rhs.known_range());
    }

    #[test]
    fn colmez_intertwines_partial_and_x(c in prop::collection::vec(-9i64..9, 1..6), plus in prop::collection::vec(-9i64..9, 0..4)) {
        let cap = win(-8, 8);
        let lo = -(c.len() as i64);
        let mut coeffs = c.clone();
        coeffs.extend(plus);
        let f = series(cap, lo, &coeffs);
        let lhs = colmez(&f.partial().unwrap(), 7).unwrap();
        let rhs = colmez(&f, 6).unwrap().mul_x();
        prop_assert!(lhs.same_function(&rhs).unwrap());
    }

    #[test]
    fn colmez_kills_plus_and_is_onto(c in prop::collection::vec(-9i64..9, 1..6)) {
        let cap = win(-8, 8);
        prop_assert!(colmez(&series(cap, 0, &c), 4).unwrap().is_zero());
        let target = LocPolyFn::from_poly(P, 5, poly(&c)).unwrap();
        let f = colmez_section(&target, cap).unwrap();
        prop_assert!(colmez(&f, 5).unwrap().same_function(&target).unwrap());
    }

    #[test]
    fn pairing_identity_random(num in -20i64..20, den in prop::sample::select(vec![1i64, 2, 3, 4, 6]), c in prop::collection::vec(-9i64..9, 1..6)) {
        let cap = win(-8, 12);
        let a: BigRational = rat(num, den);
        let mu = Distribution::dirac(&a, 12, &q(0));
        let f = series(cap, -(c.len() as i64), &c);
        let lhs = pair(&mu, &f).unwrap();
        prop_assert_eq!(lhs.clone(), pair_via_functions(&mu, &f, 6).unwrap());
        prop_assert_eq!(lhs, colmez(&f, 6).unwrap().eval(&a).unwrap());
    }
}

//! Twists `m_δ`, the involution `w_*` and `ι_{δ₁,δ₂}` on ψ = 0 elements.

use std::sync::Arc;

use num_bigint::BigInt;
use phigamma::characters::Character;
use phigamma::coefficients::{mod_inverse, rat, rint, CoeffElement, CoeffRing};
use phigamma::robba::{ExpPoly, Window};
use phigamma::twists::{
    convergence_constant, default_level, iota, iota_closed_form, m_delta, m_delta_closed_form, pair_delta,
    PsiZeroElement,
};
use phigamma::{Error, PAdic, Rat, Val};
use proptest::prelude::*;

const P: u32 = 5;

type RC = CoeffElement<Rat>;
type PC = CoeffElement<PAdic>;

fn rat_ring() -> Arc<CoeffRing<Rat>> {
    CoeffRing::base_field(P, 24).unwrap()
}

fn padic_ring() -> Arc<CoeffRing<PAdic>> {
    CoeffRing::base_field(P, 24).unwrap()
}

/// Σ c t^k (1+T)^a over the given ring, from (c, k, a-numerator, a-denominator).
fn exp_rat(ring: &Arc<CoeffRing<Rat>>, terms: &[(i64, u32, i64, i64)]) -> ExpPoly<RC> {
    let mut acc = ExpPoly::zero(P, &ring.zero());
    for &(c, k, n, d) in terms {
        acc = acc.add(&ExpPoly::monomial(P, ring.int(c), k, rat(n, d)).unwrap());
    }
    acc
}

fn exp_padic(ring: &Arc<CoeffRing<PAdic>>, terms: &[(i64, u32, i64, i64)]) -> ExpPoly<PC> {
    let mut acc = ExpPoly::zero(P, &ring.zero());
    for &(c, k, n, d) in terms {
        let coeff = ring.scalar(PAdic::from_rational_prec(&rint(c), P, 24));
        acc = acc.add(&ExpPoly::monomial(P, coeff, k, rat(n, d)).unwrap());
    }
    acc
}

fn psi0<R: phigamma::Ring>(f: ExpPoly<R>) -> PsiZeroElement<R> {
    PsiZeroElement::new(f, 2).unwrap()
}

fn generic_character(ring: &Arc<CoeffRing<PAdic>>) -> Character<PAdic> {
    // value at p = 1 + p, tame index 3, weight 2/3.
    Character::new(ring.int(6), 3, ring.rational(&rat(2, 3))).unwrap()
}

fn assert_close(a: &PsiZeroElement<PC>, b: &PsiZeroElement<PC>, threshold: i64) {
    let d = a.defect(b);
    assert!(d.at_least(threshold), "defect {d} below {threshold}:\n{a:?}\n{b:?}");
}

#[test]
fn psi_zero_requires_unit_support() {
    let ring = rat_ring();
    assert!(PsiZeroElement::new(exp_rat(&ring, &[(1, 0, 5, 1)]), 1).is_err());
    let f = PsiZeroElement::restrict_from(&exp_rat(&ring, &[(1, 0, 5, 1), (2, 1, 3, 1)]), 1);
    assert_eq!(f.element(), &exp_rat(&ring, &[(2, 1, 3, 1)]));
}

#[test]
fn decomposition_reconstructs() {
    let ring = rat_ring();
    let f = psi0(exp_rat(&ring, &[(1, 0, 7, 3), (2, 1, 1, 1), (-3, 2, 44, 1), (1, 1, 13, 2)]));
    for level in 1..=3 {
        let g = f.with_level(level);
        let comps = g.components();
        let back = PsiZeroElement::reconstruct(P, level, &comps, &ring.zero());
        assert_eq!(&back, f.element(), "level {level}");
        assert!(comps.iter().all(|(i, _)| i % 5 != 0));
    }
}

#[test]
fn m_delta_examples() {
    let ring = rat_ring();
    let f = psi0(exp_rat(&ring, &[(1, 0, 7, 3), (2, 1, 1, 1), (-3, 2, 44, 1)]));
    let triv = Character::trivial(&ring);
    assert_eq!(m_delta(&triv, &f, None).unwrap(), f.with_level(default_level(&triv)));
    let x = Character::x_power(&ring, 1);
    let mx = m_delta(&x, &f, None).unwrap();
    assert_eq!(mx.element(), &f.element().partial());
    assert_eq!(mx.accuracy(), Val::Inf);
    // Dirac at 1 is fixed by every twist, since δ(1) = 1.
    let pr = padic_ring();
    let one = psi0(exp_padic(&pr, &[(1, 0, 1, 1)]));
    let d = generic_character(&pr);
    let md = m_delta(&d, &one, None).unwrap();
    assert_close(&md, &one, 20);
}

#[test]
fn m_x_power_is_iterated_partial() {
    let ring = rat_ring();
    let f = psi0(exp_rat(&ring, &[(1, 0, 7, 3), (2, 1, 1, 1), (-3, 2, 44, 1), (5, 1, -9, 7)]));
    let mut expected = f.element().clone();
    for k in 0..=3 {
        let got = m_delta(&Character::x_power(&ring, k), &f, None).unwrap();
        assert_eq!(got.element(), &expected, "k = {k}");
        assert_eq!(got.accuracy(), Val::Inf);
        expected = expected.partial();
    }
}

#[test]
fn m_delta_series_matches_closed_form() {
    let pr = padic_ring();
    let f = psi0(exp_padic(&pr, &[(1, 0, 7, 3), (2, 1, 1, 1), (-3, 2, 44, 1), (1, 1, 13, 2)]));
    let characters = [
        generic_character(&pr),
        Character::x_power(&pr, -1),
        Character::x_power(&pr, -2),
        Character::chi(&pr).inv(),
    ];
    for d in &characters {
        let series = m_delta(d, &f, None).unwrap();
        let closed = m_delta_closed_form(d, &f).unwrap();
        assert_close(&series, &closed, 20);
    }
}

#[test]
fn m_delta_is_independent_of_level() {
    let pr = padic_ring();
    let f = psi0(exp_padic(&pr, &[(1, 0, 7, 3), (2, 1, 1, 1), (-3, 2, 44, 1)]));
    let d = generic_character(&pr);
    let n0 = default_level(&d);
    let a = m_delta(&d, &f, Some(n0)).unwrap();
    let b = m_delta(&d, &f, Some(n0 + 1)).unwrap();
    let c = m_delta(&d, &f, Some(n0 + 2)).unwrap();
    assert_close(&a, &b, 20);
    assert_close(&b, &c, 20);
}

#[test]
fn m_delta_level_selection_and_nonconvergence() {
    let pr = padic_ring();
    let d = generic_character(&pr);
    assert_eq!(convergence_constant(&d), rat(-1, 4));
    assert_eq!(default_level(&d), 2);
    // Weight of valuation −2: C_δ = −9/4, so level 2 cannot converge.
    let wild = Character::new(pr.one(), 0, pr.rational(&rat(1, 25))).unwrap();
    assert_eq!(default_level(&wild), 4);
    let f = psi0(exp_padic(&pr, &[(1, 0, 2, 1)]));
    assert!(matches!(m_delta(&wild, &f, Some(2)), Err(Error::NonConvergence(_))));
}

#[test]
fn w_star_examples() {
    let ring = rat_ring();
    let f = psi0(exp_rat(&ring, &[(1, 0, 3, 1)]));
    assert_eq!(f.w_star().unwrap().element(), &exp_rat(&ring, &[(1, 0, 1, 3)]));
    let one = psi0(exp_rat(&ring, &[(1, 0, 1, 1)]));
    assert_eq!(one.w_star().unwrap(), one);
    let g = psi0(exp_rat(&ring, &[(1, 0, 7, 3), (2, 1, 1, 1), (-3, 2, 44, 1), (1, 3, 13, 2)]));
    assert_eq!(g.w_star().unwrap().w_star().unwrap(), g);
}

#[test]
fn w_star_window_view() {
    // (1+T)^{1/2} = Σ binom(1/2, n) Tⁿ on a window, unknown above it.
    let ring = rat_ring();
    let f = psi0(exp_rat(&ring, &[(1, 0, 2, 1)])).w_star().unwrap();
    let w = f.to_window(Window::new(0, 6).unwrap()).unwrap();
    assert!(w.tail_high());
    assert_eq!(w.coeff(2), Some(ring.rational(&rat(-1, 8))));
}

#[test]
fn iota_examples() {
    let pr = padic_ring();
    let triv = Character::trivial(&pr);
    let f = psi0(exp_padic(&pr, &[(1, 0, 7, 3), (2, 1, 1, 1), (-3, 2, 44, 1)]));
    // δ₁ = δ₂ = 1: ι = w_* ∘ m_χ = w_* ∘ ∂ on ψ = 0.
    let i1 = iota(&triv, &triv, &f, None).unwrap();
    let expected = f.partial().w_star().unwrap();
    assert_close(&i1, &expected, 20);
    // On the Dirac mass at 1, ι is multiplication by δ₁(−1).
    let one = psi0(exp_padic(&pr, &[(1, 0, 1, 1)]));
    let d1 = Character::new(pr.int(3), 1, pr.int(2)).unwrap();
    let d2 = Character::x_power(&pr, 1);
    let image = iota(&d1, &d2, &one, None).unwrap();
    assert_close(&image, &one.scale(&pr.int(-1)), 20);
}

#[test]
fn iota_is_an_involution() {
    let pr = padic_ring();
    let f = psi0(exp_padic(&pr, &[(1, 0, 7, 3), (2, 1, 1, 1), (-3, 2, 44, 1), (1, 1, 13, 2)]));
    let pairs = [
        (Character::trivial(&pr), Character::trivial(&pr)),
        (generic_character(&pr), Character::x_power(&pr, 2)),
        (Character::x_power(&pr, 3), Character::chi(&pr)),
    ];
    for (d1, d2) in &pairs {
        let once = iota(d1, d2, &f, None).unwrap();
        let twice = iota(d1, d2, &once, None).unwrap();
        assert_close(&twice, &f, 20);
        assert_close(&once, &iota_closed_form(d1, d2, &f).unwrap(), 20);
    }
    assert_eq!(
        pair_delta(&Character::trivial(&pr), &Character::trivial(&pr)),
        Character::chi(&pr).inv()
    );
}

fn arb_exp() -> impl Strategy<Value = Vec<(i64, u32, i64, i64)>> {
    prop::collection::vec(
        (
            -5i64..=5,
            0u32..=3,
            prop::sample::select(vec![1i64, 2, 3, 4, 6, 7, 8, 9, 11, 13, -1, -2, -3]),
            prop::sample::select(vec![1i64, 2, 3, 7]),
        ),
        1..5,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn w_star_antilinear_on_group(t in arb_exp(), a in prop::sample::select(vec![2i64, 3, -1, 7])) {
        let ring = rat_ring();
        let f = psi0(exp_rat(&ring, &t));
        let lhs = f.sigma(&rint(a)).unwrap().w_star().unwrap();
        let rhs = f.w_star().unwrap().sigma(&rat(1, a)).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn partial_w_star_partial(t in arb_exp()) {
        let ring = rat_ring();
        let f = psi0(exp_rat(&ring, &t));
        prop_assert_eq!(f.partial().w_star().unwrap().partial(), f.w_star().unwrap());
    }

    #[test]
    fn nabla_anticommutes_with_w_star(t in arb_exp()) {
        let ring = rat_ring();
        let f = psi0(exp_rat(&ring, &t));
        let lhs = f.w_star().unwrap().nabla();
        let rhs = f.nabla().w_star().unwrap().scale(&ring.int(-1));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn w_star_swaps_residue_classes(t in arb_exp(), b in 1i64..25, n in 1u32..=2) {
        prop_assume!(b % 5 != 0);
        let ring = rat_ring();
        let f = psi0(exp_rat(&ring, &t));
        let m = 5i64.pow(n);
        let b = b % m;
        let binv = mod_inverse(&BigInt::from(b), &BigInt::from(m)).unwrap();
        let binv: i64 = binv.try_into().unwrap();
        let lhs = f.restrict(b, n).w_star().unwrap();
        let rhs = f.w_star().unwrap().restrict(binv, n);
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn m_x_power_intertwines_w_star(t in arb_exp(), k in -2i64..=3) {
        let pr = padic_ring();
        let f = psi0(exp_padic(&pr, &t));
        let d = Character::x_power(&pr, k);
        let lhs = m_delta(&d, &f.w_star().unwrap(), None).unwrap();
        let rhs = m_delta(&d.inv(), &f, None).unwrap().w_star().unwrap();
        prop_assert!(lhs.defect(&rhs).at_least(20), "defect {}", lhs.defect(&rhs));
    }
}

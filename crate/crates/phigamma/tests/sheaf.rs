//! Compatible pairs, generator actions, relations and the pairing shadow.

use std::sync::Arc;

use num_rational::BigRational;
use phigamma::characters::Character;
use phigamma::coefficients::{rat, rint, CoeffRing};
use phigamma::robba::ExpPoly;
use phigamma::sheaf::*;
use phigamma::twists::{iota, PsiZeroElement};
use phigamma::{Error, PAdic, Rat, Val};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const P: u32 = 5;

fn rat_ring() -> Arc<CoeffRing<Rat>> {
    CoeffRing::base_field(P, 24).unwrap()
}

fn padic_ring() -> Arc<CoeffRing<PAdic>> {
    CoeffRing::base_field(P, 24).unwrap()
}

fn trivial_sheaf() -> P1Sheaf<Rat, Dist<Rat>> {
    let r = rat_ring();
    P1Sheaf::distributions(&Character::trivial(&r), &Character::trivial(&r), None)
}

fn generic_pair(r: &Arc<CoeffRing<PAdic>>) -> (Character<PAdic>, Character<PAdic>) {
    (
        Character::new(r.int(6), 0, r.zero()).unwrap(),
        Character::new(r.int(2), 1, r.rational(&rat(1, 3))).unwrap(),
    )
}

fn dirac<K: phigamma::Scalar>(r: &Arc<CoeffRing<K>>, a: BigRational, k: u32, c: i64) -> ExpPoly<phigamma::CoeffElement<K>> {
    ExpPoly::monomial(P, r.int(c), k, a).unwrap()
}

#[test]
fn make_element_examples() {
    let r = rat_ring();
    let s = trivial_sheaf();
    // z₂ arbitrary, z₁ := ι(Res z₂): certified.
    let z2 = Dist::exact(dirac(&r, rint(2), 1, 3).add(&dirac(&r, rint(10), 0, 1)));
    let z1 = s.iota(&z2.res_units()).unwrap();
    let e = s.make_element(z1, z2).unwrap();
    assert!(e.defect.at_least(24));
    // Both components supported on pℤₚ: 0 = ι(0).
    let e = s
        .make_element(Dist::exact(dirac(&r, rint(5), 0, 1)), Dist::exact(dirac(&r, rint(0), 2, 1)))
        .unwrap();
    assert_eq!(e.defect, Val::Inf);
    // A mismatched pair.
    let bad = s.make_element(Dist::exact(dirac(&r, rint(1), 0, 1)), Dist::exact(dirac(&r, rint(2), 0, 1)));
    assert!(matches!(bad, Err(Error::CompatibilityViolation(_))));
}

#[test]
fn generator_examples() {
    let r = rat_ring();
    let s = trivial_sheaf();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let z = s.random_element(&mut rng).unwrap();
    // w∘w = identity.
    let ww = s.act_word(&[Generator::W, Generator::W], &z).unwrap();
    assert_eq!(ww.z1, z.z1);
    assert_eq!(ww.z2, z.z2);
    // center(a) scales both components by ω(a) = a⁻¹ (ω = χ⁻¹ here).
    let c = s.act(&Generator::Center(rint(3)), &z).unwrap();
    assert_eq!(c.z1.element(), &z.z1.element().scale(&r.rational(&rat(1, 3))));
    assert_eq!(c.z2.element(), &z.z2.element().scale(&r.rational(&rat(1, 3))));
    // Res_ℤₚ(w·diag(p,1)·z) = ω(p)ψ(z₂).
    assert!(s.diag_p_psi_defect(&z).unwrap().at_least(s.threshold()));
    // Out-of-range parameters are rejected.
    assert!(matches!(s.act(&Generator::Diag(rint(5)), &z), Err(Error::InvalidArgument(_))));
    assert!(matches!(s.act(&Generator::Upper(rint(1)), &z), Err(Error::InvalidArgument(_))));
}

#[test]
fn relations_hold_for_the_trivial_pair() {
    let s = trivial_sheaf();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for rel in standard_relations(P) {
        let rep = check_relation(&s, &rel, 4, &mut rng, |s, g| s.random_element(g)).unwrap();
        assert!(rep.pass, "{rep:?}");
    }
    let rep = check_diag_p_psi(&s, 4, &mut rng, |s, g| s.random_element(g)).unwrap();
    assert!(rep.pass);
}

#[test]
fn relations_hold_for_power_characters() {
    let r = rat_ring();
    // ε⁻¹ = x² has a terminating m-series, so the whole computation is exact.
    let s = P1Sheaf::distributions(&Character::x_power(&r, -2), &Character::x_power(&r, 1), None);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for rel in standard_relations(P) {
        let rep = check_relation(&s, &rel, 3, &mut rng, |s, g| s.random_element(g)).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert_eq!(rep.min_defect_valuation, None, "{rep:?}");
    }
}

#[test]
fn relations_hold_for_a_generic_padic_pair() {
    let r = padic_ring();
    let (d1, d2) = generic_pair(&r);
    let s = P1Sheaf::distributions(&d1, &d2, None);
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for rel in standard_relations(P) {
        let rep = check_relation(&s, &rel, 2, &mut rng, |s, g| s.random_element(g)).unwrap();
        assert!(rep.pass, "{rep:?}");
    }
}

#[test]
fn dual_sheaf_satisfies_the_relations() {
    let r = rat_ring();
    let d = P1Sheaf::dual_functions(&Character::x_power(&r, 1), &Character::trivial(&r));
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for rel in standard_relations(P) {
        let rep = check_relation(&d, &rel, 2, &mut rng, |s, g| s.random_element(g)).unwrap();
        assert!(rep.pass, "{rep:?}");
    }
}

#[test]
fn pairing_is_invariant() {
    let r = rat_ring();
    let (d1, d2) = (Character::trivial(&r), Character::trivial(&r));
    let s = P1Sheaf::distributions(&d1, &d2, None);
    let d = P1Sheaf::dual_functions(&d1, &d2);
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let rep = check_pairing_invariance(&s, &d, &sample_generators(P), 3, &mut rng).unwrap();
    assert!(rep.pass, "{rep:?}");

    let r = padic_ring();
    let (d1, d2) = generic_pair(&r);
    let s = P1Sheaf::distributions(&d1, &d2, None);
    let d = P1Sheaf::dual_functions(&d1, &d2);
    let rep = check_pairing_invariance(&s, &d, &sample_generators(P), 2, &mut rng).unwrap();
    assert!(rep.pass, "{rep:?}");
}

#[test]
fn involution_matches_the_twists_module() {
    let r = padic_ring();
    let (d1, d2) = generic_pair(&r);
    let s = P1Sheaf::distributions(&d1, &d2, None);
    let closed = P1Sheaf::distributions_closed_form(&d1, &d2);
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let rep = check_involution_consistency(&s, &closed, 4, &mut rng).unwrap();
    assert!(rep.pass, "{rep:?}");
    // The gluing involution is ι_{δ₁, δ₂χ⁻²} of the twists module.
    let chi = Character::chi(&r);
    let d2_shift = d2.div(&chi).div(&chi);
    for _ in 0..3 {
        let f = s.random_dist(&mut rng, 3, Support::Units).unwrap();
        let ours = s.iota(&f).unwrap();
        let theirs = iota(&d1, &d2_shift, &PsiZeroElement::restrict_from(f.element(), 1), None).unwrap();
        let theirs = Dist::with_accuracy(theirs.element().clone(), theirs.accuracy());
        assert!(ours.defect(&theirs).unwrap().at_least(s.threshold()));
    }
    assert_eq!(gluing_character(&d1, &d2).weight(), &(d1.weight().clone() - d2.weight().clone() + r.one()));
}

#[test]
fn gluing_with_inverse_cyclotomic_twist_breaks_the_torus_action() {
    // Negative control: gluing through m_{δ⁻¹} with δ = δ₁δ₂⁻¹χ⁻¹ does not
    // intertwine diag(a,1) on the two charts, so compatibility is lost.
    let r = rat_ring();
    let (d1, d2) = (Character::trivial(&r), Character::trivial(&r));
    let (a, b) = (d1.clone(), d2.clone());
    let s = P1Sheaf::distributions_with(&d1, &d2, move |z: &Dist<Rat>| {
        let f = PsiZeroElement::restrict_from(z.element(), 1);
        let out = iota(&a, &b, &f, None)?;
        Ok(Dist::with_accuracy(out.element().clone(), out.accuracy()))
    });
    let z2 = Dist::exact(dirac(&r, rint(2), 0, 1));
    let z1 = s.iota(&z2.res_units()).unwrap();
    let z = s.make_element(z1, z2).unwrap();
    assert!(matches!(s.act(&Generator::Diag(rint(2)), &z), Err(Error::CompatibilityViolation(_))));
}

#[test]
fn jet_function_examples() {
    let r = rat_ring();
    // g = 1 + 2x + x³.
    let g = JetFn::polynomial(&r, vec![r.one(), r.int(2), r.zero(), r.one()]);
    let t = g.taylor(&rint(1), 3).unwrap();
    assert_eq!(t.coeffs(), &[r.int(4), r.int(5), r.int(3), r.int(1)]);
    assert_eq!(g.derivative_at(&rint(2), 2).unwrap(), r.int(12));
    // g(1/x) at x = 2: value g(1/2) = 17/8, derivative −g'(1/2)/4 = −(2 + 3/4)/4.
    let gi = g.invert();
    let t = gi.taylor(&rint(2), 1).unwrap();
    assert_eq!(t.coeff(0), r.rational(&rat(17, 8)));
    assert_eq!(t.coeff(1), r.rational(&rat(-11, 16)));
    // {g, Dirac_a} = −g(a); {g, t·Dirac_a} = −g'(a).
    let (v, _) = g.pair(&Dist::exact(dirac(&r, rint(3), 0, 1))).unwrap();
    assert_eq!(v, r.int(-34));
    let (v, _) = g.pair(&Dist::exact(dirac(&r, rint(3), 1, 1))).unwrap();
    assert_eq!(v, r.int(-29));
    // Indicator of 2 + 5ℤₚ.
    let h = g.indicator(2, 1);
    assert!(h.taylor(&rint(3), 0).unwrap().is_zero());
    assert_eq!(h.taylor(&rint(7), 0).unwrap().coeff(0), r.int(358));
    // δ(x)g(x) for δ = x²: the jet of x²(1 + 2x + x³) at 1 is (4, 13, ...).
    let m = g.mul_character(&Character::x_power(&r, 2));
    let t = m.taylor(&rint(1), 1).unwrap();
    assert_eq!(t.coeffs(), &[r.int(4), r.int(13)]);
}

#[test]
fn relation_report_is_serializable() {
    let s = trivial_sheaf();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let rel = Relation::new(vec![Generator::W, Generator::W], vec![]);
    let rep = check_relation(&s, &rel, 2, &mut rng, |s, g| s.random_element(g)).unwrap();
    let json = serde_json::to_value(&rep).unwrap();
    assert_eq!(json["relation"], "w·w = 1");
    assert_eq!(json["samples"], 2);
    assert_eq!(json["pass"], true);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn torus_relations_hold_on_random_elements(seed in 0u64..10_000, a in 1i64..5, b in 1i64..5) {
        let s = trivial_sheaf();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = s.random_element(&mut rng).unwrap();
        let lhs = s.act_word(&[Generator::Diag(rint(a)), Generator::Diag(rint(b))], &z).unwrap();
        let rhs = s.act(&Generator::Diag(rint(a * b)), &z).unwrap();
        prop_assert!(s.element_defect(&lhs, &rhs).unwrap().at_least(s.threshold()));
        let back = s.act_word(&[Generator::Upper(rint(-5 * a)), Generator::Upper(rint(5 * a))], &z).unwrap();
        prop_assert!(s.element_defect(&back, &z).unwrap().at_least(s.threshold()));
    }
}

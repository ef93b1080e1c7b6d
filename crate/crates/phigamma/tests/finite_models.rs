//! Pol* and locally polynomial models: matrices, relations and extensions.

use std::sync::Arc;

use phigamma::characters::Character;
use phigamma::coefficients::{rat, CoeffRing};
use phigamma::finite_models::{
    build_extension, coboundary_witness, topological_generator, LocPolyModule, PolDualModule,
};
use phigamma::{Error, PAdic, Rat, RatCoeff, Ring};
use proptest::prelude::*;

const P: u32 = 5;

fn ring() -> Arc<CoeffRing<Rat>> {
    CoeffRing::base_field(P, 20).unwrap()
}

fn pol(n: usize, delta: &Character<Rat>) -> PolDualModule<Rat> {
    PolDualModule::new(n, delta, &Character::trivial(delta.ring())).unwrap()
}

fn unit_vec(ring: &Arc<CoeffRing<Rat>>, n: usize, i: usize) -> Vec<RatCoeff> {
    (0..n).map(|j| if i == j { ring.one() } else { ring.zero() }).collect()
}

fn generic(ring: &Arc<CoeffRing<Rat>>) -> Character<Rat> {
    Character::new(ring.int(6), 0, ring.zero()).unwrap()
}

#[test]
fn generator_choice() {
    assert_eq!(topological_generator(5), 2);
    assert_eq!(topological_generator(7), 3);
    assert_eq!(topological_generator(3), 2);
}

#[test]
fn tau_examples_for_the_trivial_character() {
    let r = ring();
    let m = pol(3, &Character::trivial(&r));
    assert_eq!(m.kappa(), &r.int(-1));
    let tau = &m.operators().tau;
    assert_eq!(tau.col(0), unit_vec(&r, 4, 0));
    assert_eq!(tau.col(1), vec![r.int(-5), r.one(), r.zero(), r.zero()]);
}

#[test]
fn sigma_and_phi_are_diagonal() {
    let r = ring();
    let m = pol(4, &Character::x_power(&r, -1));
    // σ₃(t²) = x⁻¹(3)·3²·t² = 3t².
    assert_eq!(m.sigma(3).unwrap().col(2), {
        let mut v = unit_vec(&r, 5, 2);
        v[2] = r.int(3);
        v
    });
    let ops = m.operators();
    assert_eq!(ops.generator, 2);
    assert_eq!(ops.gamma.get(2, 2), &r.int(2)); // (1/2)·4
    assert_eq!(ops.phi.get(3, 3), &r.int(25)); // (1/5)·125
}

#[test]
fn lie_matrix_examples() {
    let r = ring();
    let triv = pol(4, &Character::trivial(&r));
    let (a_plus, u_minus) = triv.lie_matrices();
    assert!(u_minus.col(0).iter().all(|c| c.is_zero_elem()));
    for j in 0..5 {
        assert_eq!(a_plus.get(j, j), &r.int(j as i64));
    }
    let inv = pol(4, &Character::x_power(&r, -1));
    let (_, u_minus) = inv.lie_matrices();
    assert!(u_minus.col(1).iter().all(|c| c.is_zero_elem()));
    assert_eq!(u_minus.get(1, 2), &r.int(-1)); // −(w + 2)
    // In the basis j!·t^j: u⁻ = j(−w − j) on the superdiagonal.
    let (_, u_fact) = inv.lie_matrices_factorial_basis();
    assert_eq!(u_fact.get(1, 2), &r.int(-2)); // 2·(1 − 2)
    assert_eq!(u_fact.get(2, 3), &r.int(-6)); // 3·(1 − 3)
}

#[test]
fn relations_hold_exactly_on_pol_models() {
    let r = ring();
    for delta in [
        Character::trivial(&r),
        Character::x_power(&r, -1),
        Character::x_power(&r, -2),
        Character::x_power(&r, 2),
        generic(&r),
        Character::chi(&r),
    ] {
        let m = pol(6, &delta);
        for c in m.operators().relation_checks(1).unwrap() {
            assert!(c.pass, "{}", c.name);
            assert_eq!(c.defect, phigamma::Val::Inf, "{}", c.name);
        }
    }
}

#[test]
fn relations_hold_on_padic_models_with_non_integral_weight() {
    let r = CoeffRing::<PAdic>::base_field(P, 20).unwrap();
    let delta = Character::new(r.int(6), 3, r.rational(&rat(2, 3))).unwrap();
    let m = PolDualModule::new(5, &delta, &Character::trivial(&r)).unwrap();
    assert!(m.operators().relation_checks(1).unwrap().iter().all(|c| c.pass));
}

#[test]
fn relations_hold_over_dual_numbers() {
    // Deforming the value at p keeps the exact path.
    let r = CoeffRing::<Rat>::dual(P, 20, 2).unwrap();
    let delta = Character::new(r.one() + r.basis(1), 0, r.zero()).unwrap();
    let m = PolDualModule::new(4, &Character::trivial(&r), &delta).unwrap();
    assert!(m.operators().relation_checks(1).unwrap().iter().all(|c| c.pass));
    // Deforming the weight needs p-adic scalars (δ(a) = exp(ε log a) on 1 + pℤₚ).
    assert!(matches!(
        PolDualModule::new(4, &Character::trivial(&r), &Character::new(r.one(), 0, r.basis(1)).unwrap()),
        Err(Error::NotRational(_))
    ));
    let r = CoeffRing::<PAdic>::dual(P, 20, 2).unwrap();
    let delta = Character::new(r.one() + r.basis(1), 0, r.basis(1)).unwrap();
    let m = PolDualModule::new(4, &Character::trivial(&r), &delta).unwrap();
    assert!(m.operators().relation_checks(1).unwrap().iter().all(|c| c.pass));
}

#[test]
fn locpoly_examples() {
    let r = ring();
    let k = 3;
    let m = LocPolyModule::new(2, 3, 1, &Character::x_power(&r, k), &Character::trivial(&r)).unwrap();
    let ops = m.operators();
    // u⁻x = (k − 1)x² on every class.
    let x = m.global_vector(&[r.zero(), r.one()]).unwrap();
    let expected = m.global_vector(&[r.zero(), r.zero(), r.int(k - 1)]).unwrap();
    assert_eq!(ops.u_minus.apply(&x), expected);
    // a⁺1 = κ.
    let one = m.global_vector(&[r.one()]).unwrap();
    assert_eq!(ops.a_plus.apply(&one), m.global_vector(&[r.int(k)]).unwrap());
    // φ(1_{ℤₚ^×}) = δ(p)·1_{pℤₚ^×}; at level 1 the target is quotiented out.
    let units: Vec<_> = (1..5)
        .map(|u| m.class_vector(0, u, &[r.one()]).unwrap())
        .fold(vec![r.zero(); m.dim()], |acc, v| acc.into_iter().zip(v).map(|(a, b)| a + b).collect());
    let image = ops.phi.apply(&units);
    let expected: Vec<_> = (1..5)
        .map(|u| m.class_vector(1, u, &[r.int(125)]).unwrap())
        .fold(vec![r.zero(); m.dim()], |acc, v| acc.into_iter().zip(v).map(|(a, b)| a + b).collect());
    assert_eq!(image, expected);
    let m1 = LocPolyModule::new(1, 3, 1, &Character::x_power(&r, k), &Character::trivial(&r)).unwrap();
    assert!(m1.operators().phi.is_zero());
}

#[test]
fn locpoly_relations_and_loss_flags() {
    let r = ring();
    // Integer weight κ = D_work: polynomials of degree ≤ κ are stable, nothing is lost.
    let m = LocPolyModule::new(2, 2, 1, &Character::x_power(&r, 3), &Character::trivial(&r)).unwrap();
    assert!(!m.loss_flags()["tau"]);
    assert!(!m.loss_flags()["u_minus"]);
    let m = LocPolyModule::new(2, 2, 1, &Character::x_power(&r, 4), &Character::trivial(&r)).unwrap();
    assert!(m.loss_flags()["tau"]);
    assert!(m.loss_flags()["u_minus"]);
    assert!(m.operators().relation_checks(-1).unwrap().iter().all(|c| c.pass));
    let g = LocPolyModule::new(2, 2, 1, &generic(&r), &Character::trivial(&r)).unwrap();
    assert!(g.loss_flags()["tau"]);
    assert_eq!(g.dim(), 2 * 4 * 4);
    assert!(matches!(
        LocPolyModule::new(0, 2, 1, &generic(&r), &Character::trivial(&r)),
        Err(Error::InvalidArgument(_))
    ));
}

#[test]
fn extension_examples() {
    let r = ring();
    let m = pol(3, &Character::trivial(&r));
    let ops = m.operators();
    let zero = vec![r.zero(); 4];
    let split = build_extension(ops, &zero, &zero).unwrap();
    assert!(split.is_split().unwrap());
    // c_φ = t⁰, c_γ = 0: (φ − 1)d = t⁰ has no solution since φ(t⁰) = t⁰.
    let e0 = unit_vec(&r, 4, 0);
    let ext = build_extension(ops, &e0, &zero).unwrap();
    assert!(!ext.is_split().unwrap());
    assert!(ext.coboundary_witness().unwrap().is_none());
    // A coboundary c(g) = (g − 1)d splits.
    let d: Vec<_> = (0..4).map(|i| r.int(i as i64 * 3 - 2)).collect();
    let one = ops.identity();
    let c_phi = ops.phi.sub(&one).apply(&d);
    let c_gamma = ops.gamma.sub(&one).apply(&d);
    let ext = build_extension(ops, &c_phi, &c_gamma).unwrap();
    assert!(ext.is_split().unwrap());
    let w = ext.coboundary_witness().unwrap().unwrap();
    assert_eq!(ops.phi.sub(&one).apply(&w), c_phi);
    // A cochain violating the cocycle condition is rejected.
    assert!(matches!(
        build_extension(ops, &unit_vec(&r, 4, 1), &zero),
        Err(Error::IdentityFailure(_))
    ));
}

#[test]
fn module_dump_is_serializable() {
    let r = ring();
    let m = pol(2, &Character::x_power(&r, -1));
    let dump = m.operators().dump("pol_dual", |c| c.to_string());
    let s = serde_json::to_string(&dump).unwrap();
    assert!(s.contains("\"tau\""));
    assert_eq!(dump.matrices["phi"][1][1], "1");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_models_satisfy_relations(vp in 1i64..30, tame in 0i64..4, w in -4i64..4, n in 1usize..6) {
        let r = ring();
        let Ok(delta) = Character::new(r.int(vp), tame, r.int(w)) else { return Ok(()); };
        // Exact evaluation at the generator needs the tame index to match the weight.
        if (tame - w).rem_euclid(4) != 0 {
            return Ok(());
        }
        let m = pol(n, &delta);
        prop_assert!(m.operators().relation_checks(1).unwrap().iter().all(|c| c.pass));
    }

    #[test]
    fn split_iff_coboundary(d in prop::collection::vec(-5i64..5, 4), c in prop::collection::vec(-5i64..5, 4), w in -2i64..3) {
        let r = ring();
        let m = pol(3, &Character::x_power(&r, w));
        let ops = m.operators();
        let one = ops.identity();
        let dv: Vec<_> = d.iter().map(|&x| r.int(x)).collect();
        let cv: Vec<_> = c.iter().map(|&x| r.int(x)).collect();
        // Cocycles of the form ((φ−1)d + kernel part): perturb the coboundary by a
        // cocycle (c_φ, c_γ) = (v, 0) with (γ − 1)v = 0.
        let mut c_phi = ops.phi.sub(&one).apply(&dv);
        let c_gamma = ops.gamma.sub(&one).apply(&dv);
        let fixed: Vec<_> = cv.iter().enumerate().map(|(j, x)| if ops.gamma.get(j, j) == &r.one() { x.clone() } else { r.zero() }).collect();
        for (a, b) in c_phi.iter_mut().zip(&fixed) {
            *a = a.clone() + b.clone();
        }
        let ext = build_extension(ops, &c_phi, &c_gamma).unwrap();
        let witness = coboundary_witness(&ops.phi, &ops.gamma, &c_phi, &c_gamma).unwrap();
        prop_assert_eq!(ext.is_split().unwrap(), witness.is_some());
    }
}

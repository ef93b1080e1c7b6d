//! Coefficient-ring arithmetic: capped precision, the three ring families, inverses.

use num_bigint::BigInt;
use num_rational::BigRational;
use phigamma::coefficients::{rat, rint, CoeffRing, PAdic, Ring, RingKind, Val};
use phigamma::{Error, Rat};
use proptest::prelude::*;

const P: u32 = 5;

#[test]
fn padic_addition_cancels_exactly() {
    let a = PAdic::from_rational_prec(&rint(1), P, 20);
    let b = PAdic::from_rational_prec(&rint(-1), P, 20);
    let s = a + b;
    assert!(s.is_zero_elem());
    assert_eq!(s.abs_precision(), Val::Fin(20));
    let e = PAdic::int(1) + PAdic::int(-1);
    assert_eq!(e.val(P), Val::Inf);
}

#[test]
fn padic_digit_addition() {
    // p + p^2 = p (1 + p), valuation 1.
    let a = PAdic::from_rational_prec(&rint(5), P, 10);
    let b = PAdic::from_rational_prec(&rint(25), P, 10);
    let s = a + b;
    assert_eq!(s.val(P), Val::Fin(1));
    assert!(s.agrees_with(&PAdic::int(30)));
    // Precision is capped by the less precise operand: 5 is known mod 5^11.
    assert_eq!(s.abs_precision(), Val::Fin(11));
}

#[test]
fn padic_cancellation_loses_digits() {
    let a = PAdic::from_rational_prec(&rint(1 + 5 * 5 * 5), P, 10);
    let b = PAdic::from_rational_prec(&rint(-1), P, 10);
    let s = a + b;
    assert_eq!(s.val(P), Val::Fin(3));
    assert_eq!(s.rel_precision(), Some(7));
}

#[test]
fn padic_geometric_inverse() {
    // inv(1 + p) = 1 − p + p² − … to the working precision.
    let x = PAdic::from_rational_prec(&rint(6), P, 12);
    let inv = x.try_inverse().unwrap();
    let mut series = BigRational::from_integer(0.into());
    for k in 0..12 {
        series += rint((-5i64).pow(k));
    }
    assert!(inv.agrees_with(&PAdic::from_rational_prec(&series, P, 12)));
    assert_eq!(inv.rel_precision(), Some(12));
}

#[test]
fn dual_number_examples() {
    let ring = CoeffRing::<Rat>::dual(P, 20, 2).unwrap();
    let one = ring.one();
    let eps = ring.basis(1);
    assert_eq!((one.clone() + eps.clone()) + (one.clone() - eps.clone()), ring.int(2));
    assert!((eps.clone() * eps.clone()).is_zero_elem());
    let inv = (one.clone() + eps.clone()).inverse().unwrap();
    assert_eq!(inv, one.clone() - eps.clone());
    match eps.inverse() {
        Err(Error::NonUnit { annihilator }) => assert_eq!(annihilator, "eps"),
        other => panic!("expected NonUnit, got {other:?}"),
    }
    let e3 = CoeffRing::<Rat>::dual(P, 20, 3).unwrap();
    match e3.basis(1).inverse() {
        Err(Error::NonUnit { annihilator }) => assert_eq!(annihilator, "eps^2"),
        other => panic!("expected NonUnit, got {other:?}"),
    }
    let x = ring.element(vec![rint(3), rint(5)]).unwrap();
    assert_eq!(x.residue_reduce().coords(), &[rint(3)]);
    assert!(eps.residue_reduce().is_zero_elem());
    let v = ring.element(vec![rint(5), rint(25)]).unwrap();
    assert_eq!(v.val(), Val::Fin(1));
    assert_eq!(v.coord_valuations(), vec![Val::Fin(1), Val::Fin(2)]);
}

#[test]
fn extension_examples() {
    // y^2 − p is Eisenstein.
    let ring = CoeffRing::<Rat>::extension(P, 20, vec![rint(-5), rint(0), rint(1)]).unwrap();
    let y = ring.basis(1);
    assert_eq!(y.clone() * y.clone(), ring.int(5));
    let inv = y.inverse().unwrap();
    assert_eq!(inv * y, ring.one());
    // y^2 − 2 is unramified (2 is not a square mod 5); y^2 − 4 is reducible.
    assert!(CoeffRing::<Rat>::extension(P, 20, vec![rint(-2), rint(0), rint(1)]).is_ok());
    assert!(CoeffRing::<Rat>::extension(P, 20, vec![rint(-4), rint(0), rint(1)]).is_err());
    assert!(matches!(ring.kind(), RingKind::Extension(_)));
}

#[test]
fn prime_two_rejected() {
    assert!(matches!(CoeffRing::<Rat>::base_field(2, 20), Err(Error::UnsupportedPrime(2))));
}

#[test]
fn valuations() {
    let ring = CoeffRing::<Rat>::base_field(P, 20).unwrap();
    assert_eq!(ring.int(125).val(), Val::Fin(3));
    assert_eq!(ring.zero().val(), Val::Inf);
    let a = ring.rational(&rat(2, 25));
    let b = ring.rational(&rat(1, 5));
    assert_eq!((a * b).val(), Val::Fin(-3));
}

#[test]
fn teichmuller_log_exp() {
    let t = PAdic::int(2).teichmuller(P, 15).unwrap();
    // ω(2)^4 = 1.
    assert!(t.pow_u(4).agrees_with(&PAdic::int(1)));
    assert!((t.clone() - PAdic::int(2)).val(P) >= Val::Fin(1));
    let l = PAdic::int(6).log1(P, 15).unwrap();
    assert_eq!(l.val(P), Val::Fin(1));
    let back = l.exp(P, 15).unwrap();
    assert!(back.round_abs(P, 14).agrees_with(&PAdic::int(6)));
}

fn padic_unit() -> impl Strategy<Value = PAdic> {
    (1i64..10_000, 0i64..3).prop_filter_map("unit", |(n, v)| {
        if n % 5 == 0 {
            None
        } else {
            Some(PAdic::from_rational_prec(&rint(n * 5i64.pow(v as u32)), P, 16))
        }
    })
}

proptest! {
    #[test]
    fn inverse_of_product(a in padic_unit(), b in padic_unit()) {
        let lhs = (a.clone() * b.clone()).try_inverse().unwrap();
        let rhs = b.try_inverse().unwrap() * a.try_inverse().unwrap();
        prop_assert!(lhs.agrees_with(&rhs));
    }

    #[test]
    fn residue_is_a_ring_homomorphism(a0 in -50i64..50, a1 in -50i64..50, b0 in -50i64..50, b1 in -50i64..50) {
        let ring = CoeffRing::<Rat>::dual(P, 20, 2).unwrap();
        let a = ring.element(vec![rint(a0), rint(a1)]).unwrap();
        let b = ring.element(vec![rint(b0), rint(b1)]).unwrap();
        prop_assert_eq!((a.clone() * b.clone()).residue_reduce(), a.residue_reduce() * b.residue_reduce());
        prop_assert_eq!((a.clone() + b.clone()).residue_reduce(), a.residue_reduce() + b.residue_reduce());
    }

    #[test]
    fn padic_ring_axioms(a in padic_unit(), b in padic_unit(), c in padic_unit()) {
        let l = a.clone() * (b.clone() + c.clone());
        let r = a.clone() * b + a * c;
        prop_assert!(l.agrees_with(&r));
    }

    #[test]
    fn exact_matches_big_integer_digits(n in 1i64..100_000) {
        let x = PAdic::from_rational_prec(&rint(n), P, 30);
        let rep = x.representative();
        prop_assert_eq!(rep, BigRational::from_integer(BigInt::from(n)));
    }
}

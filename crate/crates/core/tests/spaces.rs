use infdim::product_engine::SequenceSpec;
use infdim::sequence_spaces::{
    absolute_basis_transform, bi_norm, c0_membership, inverse_absolute_basis_transform, lp_membership,
    partial_reconstruction, tail_power_sum, Basis, BasisSpec, CoefficientVector, Membership, Space,
};
use infdim::Complex64;
use proptest::prelude::*;

fn r(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

#[test]
fn harmonic_sequence_sits_between_l1_and_l2() {
    let x = SequenceSpec::power_law(r(1.0), 1.0);
    assert_eq!(lp_membership(&x, 1.0), Membership::CertifiedOut);
    assert_eq!(lp_membership(&x, 2.0), Membership::CertifiedIn);
    assert_eq!(c0_membership(&x), Membership::CertifiedIn);
    assert_eq!(c0_membership(&SequenceSpec::constant(r(0.1))), Membership::CertifiedOut);
}

#[test]
fn zeta_two_tail_sum() {
    let (v, err) = tail_power_sum(&SequenceSpec::power_law(r(1.0), 1.0).tail, 0, 2.0).unwrap();
    assert!((v - std::f64::consts::PI.powi(2) / 6.0).abs() <= err + 1e-12);
}

#[test]
fn basis_constant_of_the_unit_vector_basis() {
    let x = CoefficientVector {
        coeffs: SequenceSpec::geometric(r(1.0), r(0.5)),
        basis: BasisSpec { space: Space::EllP(2.0), basis: Basis::StandardUnitVectors },
    };
    let b = bi_norm(&x, 200);
    assert!(b.monotone);
    assert!((b.value - (1.0f64 / 3.0).sqrt()).abs() < 1e-12);
}

proptest! {
    #[test]
    fn power_law_membership_follows_the_exponent(a in 0.1..3.0f64, s in 0.2..3.0f64, p in 1.0..4.0f64) {
        prop_assume!((s * p - 1.0).abs() > 1e-6);
        let x = SequenceSpec::power_law(r(a), s);
        let expected = if s * p > 1.0 { Membership::CertifiedIn } else { Membership::CertifiedOut };
        prop_assert_eq!(lp_membership(&x, p), expected);
    }

    #[test]
    fn membership_is_monotone_in_p(a in 0.1..3.0f64, s in 0.2..3.0f64, p in 1.0..3.0f64, dp in 0.0..2.0f64) {
        let x = SequenceSpec::power_law(r(a), s);
        if lp_membership(&x, p) == Membership::CertifiedIn {
            prop_assert_eq!(lp_membership(&x, p + dp), Membership::CertifiedIn);
        }
    }

    #[test]
    fn absolute_basis_round_trip(prefix in prop::collection::vec(-5.0..5.0f64, 0..5), a in -2.0..2.0f64, q in 0.0..0.45f64) {
        let x = CoefficientVector {
            coeffs: SequenceSpec::geometric(r(a), r(q)).with_prefix(prefix.into_iter().map(r).collect()),
            basis: BasisSpec { space: Space::EllP(2.0), basis: Basis::StandardUnitVectors },
        };
        let y = absolute_basis_transform(&x).unwrap();
        let back = inverse_absolute_basis_transform(&y).unwrap();
        let (u, v) = (partial_reconstruction(&x, 30), partial_reconstruction(&y, 30));
        for (s, t) in u.iter().zip(&v) {
            prop_assert!((s - t).norm() <= 1e-12 * s.norm().max(1.0));
        }
        for k in 1..=30 {
            prop_assert!((back.coeffs.term(k) - x.coeffs.term(k)).norm() <= 1e-12 * x.coeffs.term(k).norm().max(1.0));
        }
    }
}

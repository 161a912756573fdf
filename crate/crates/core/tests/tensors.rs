use infdim::product_engine::{SequenceSpec, Verdict};
use infdim::tensor_states::{
    apply_phase, classify_equivalence, factor_inner, tensor_inner, FactorFunction, FactorKind, PhaseVerdict,
    ProductVector, Relation,
};
use infdim::Complex64;
use proptest::prelude::*;

const TOL: f64 = 1e-10;

fn gaussian(sigma: f64, mean: f64) -> FactorFunction {
    FactorFunction::new(FactorKind::Gaussian { sigma, mean }).unwrap()
}

fn factor() -> impl Strategy<Value = FactorFunction> {
    prop_oneof![
        Just(FactorFunction::indicator()),
        (0.3..2.0f64, -1.0..1.0f64).prop_map(|(s, m)| gaussian(s, m)),
        (0u8..4).prop_map(|n| FactorFunction::new(FactorKind::HermiteGaussian { degree: n }).unwrap()),
        (-0.4..0.0f64, 0.05..0.4f64)
            .prop_map(|(lo, w)| FactorFunction::new(FactorKind::ScaledIndicator { lo, hi: lo + w, height: 1.0 }).unwrap().normalized()),
    ]
}

fn vector() -> impl Strategy<Value = ProductVector> {
    prop::collection::vec(factor(), 0..3).prop_map(|ex| ProductVector::with_tail(ex, FactorFunction::indicator()))
}

fn value(g: &ProductVector, h: &ProductVector) -> Complex64 {
    let cert = tensor_inner(g, h, TOL).unwrap();
    cert.limit.unwrap_or(Complex64::new(0.0, 0.0))
}

#[test]
fn gaussian_overlap_closed_form() {
    let (s1, s2, m) = (0.7, 1.3, 0.4);
    let ip = factor_inner(&gaussian(s1, 0.0), &gaussian(s2, m)).unwrap();
    let s = s1 * s1 + s2 * s2;
    let oracle = (2.0 * s1 * s2 / s).sqrt() * (-m * m / (2.0 * s)).exp();
    assert!((ip.re - oracle).abs() < 1e-10 && ip.im.abs() < 1e-12);
}

#[test]
fn hermite_functions_are_orthonormal() {
    for n in 0..5u8 {
        for m in 0..5u8 {
            let a = FactorFunction::new(FactorKind::HermiteGaussian { degree: n }).unwrap();
            let b = FactorFunction::new(FactorKind::HermiteGaussian { degree: m }).unwrap();
            let ip = factor_inner(&a, &b).unwrap();
            let expect = if n == m { 1.0 } else { 0.0 };
            assert!((ip - Complex64::new(expect, 0.0)).norm() < 1e-10, "{n} {m}: {ip}");
        }
    }
}

#[test]
fn harmonic_phases_give_weak_but_not_strong_equivalence() {
    let z = SequenceSpec::unit_phase(SequenceSpec::power_law(Complex64::new(1.0, 0.0), 1.0));
    let g = ProductVector::canonical();
    let moved = apply_phase(&z, &g, TOL).unwrap();
    assert_eq!(moved.verdict, PhaseVerdict::MovedToOrthogonalClass);
    assert!(moved.weak_class_preserved);
    let v = classify_equivalence(&g, &moved.vector).unwrap();
    assert_eq!(v.relation, Relation::WeakEquivalentOnly);
    assert_eq!(tensor_inner(&g, &moved.vector, TOL).unwrap().verdict, Verdict::QuasiConvergent);
}

#[test]
fn orthogonal_factor_gives_zero_inner_product() {
    let h0 = FactorFunction::new(FactorKind::HermiteGaussian { degree: 0 }).unwrap();
    let h1 = FactorFunction::new(FactorKind::HermiteGaussian { degree: 1 }).unwrap();
    let g = ProductVector::with_tail(vec![h0], FactorFunction::indicator());
    let h = ProductVector::with_tail(vec![h1], FactorFunction::indicator());
    assert!(value(&g, &h).norm() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn product_vectors_have_unit_norm(g in vector()) {
        prop_assert!((value(&g, &g) - Complex64::new(1.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn inner_product_is_conjugate_symmetric(g in vector(), h in vector()) {
        prop_assert!((value(&g, &h) - value(&h, &g).conj()).norm() < 1e-9);
        prop_assert!(value(&g, &h).norm() <= 1.0 + 1e-9);
    }

    #[test]
    fn equivalence_is_symmetric(g in vector(), h in vector()) {
        let a = classify_equivalence(&g, &h).unwrap().relation;
        let b = classify_equivalence(&h, &g).unwrap().relation;
        prop_assert_eq!(a, b);
        prop_assert_eq!(classify_equivalence(&g, &g).unwrap().relation, Relation::StrongEquivalent);
    }

    #[test]
    fn summable_phases_preserve_norm_and_strong_class(g in vector(), theta in -1.0..1.0f64, q in 0.1..0.8f64) {
        let z = SequenceSpec::unit_phase(SequenceSpec::geometric(Complex64::new(theta, 0.0), Complex64::new(q, 0.0)));
        let out = apply_phase(&z, &g, TOL).unwrap();
        let PhaseVerdict::SameStrongClass(c) = out.verdict else { return Err(TestCaseError::fail("moved class")) };
        prop_assert!((c.norm() - 1.0).abs() < 1e-9);
        prop_assert!((value(&out.vector, &out.vector) - Complex64::new(1.0, 0.0)).norm() < 1e-9);
        prop_assert!((value(&out.vector, &g) - c).norm() < 1e-8);
    }
}

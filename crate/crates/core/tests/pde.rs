use infdim::pde_examples::{
    bump, dinfty_apply, hbar_closed_form, hbar_eval, hbar_ode_residual, laplacian_fd, laplacian_truncated, thompson_equilibrium,
    thompson_normalization_check, xi_build, EllipticOperator, HBarSpec, PolyGauss, TestFunction, ThompsonCoeffs,
};
use infdim::tensor_states::{tensor_inner, FactorFunction, FactorKind, ProductVector};
use infdim::Complex64;
use proptest::prelude::*;

/// Lanczos approximation (g = 7, nine terms).
fn lanczos_gamma(x: f64) -> f64 {
    const G: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    let x = x - 1.0;
    let t = x + 7.5;
    let s: f64 = G[0] + (1..9).map(|i| G[i] / (x + i as f64)).sum::<f64>();
    (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * s
}

#[test]
fn hbar_matches_gamma_on_a_grid() {
    for a in [1.5, 2.0, 4.0] {
        let spec = HBarSpec::new(a).unwrap();
        let w = spec.half_width();
        for i in 0..20 {
            let x = -0.95 * w + 1.9 * w * i as f64 / 19.0;
            let want = Complex64::from_polar(lanczos_gamma(1.0 + 1.0 / a), -x);
            assert!((hbar_eval(&spec, x, 1e-12).unwrap() - want).norm() < 1e-6, "a = {a}, x = {x}");
            assert!((hbar_closed_form(&spec, x) - want).norm() < 1e-12);
            assert!(hbar_ode_residual(&spec, x, 1e-4).unwrap() < 1e-6);
        }
        assert_eq!(hbar_eval(&spec, 1.01 * w, 1e-12).unwrap(), Complex64::new(0.0, 0.0));
    }
    assert!(HBarSpec::new(1.0).is_err());
}

#[test]
fn xi_factor_has_unit_norm() {
    for eps in [0.02, 0.05, 0.1] {
        let xi = xi_build(eps).unwrap();
        let (m, h) = (20000, eps / 20000.0);
        let (mut mass, mut cos) = (0.0, 0.0);
        for i in 0..m {
            let z = -eps / 2.0 + (i as f64 + 0.5) * h;
            mass += bump(eps, z) * h;
            cos += bump(eps, z) * z.cos() * h;
        }
        assert!((xi.alpha - cos / mass).abs() < 1e-9);
        assert!(xi.alpha < 1.0 && xi.alpha > 0.99);
        assert!((xi.unit().norm() - 1.0).abs() < 1e-12);
        let g = ProductVector::with_tail(vec![xi.unit()], xi.unit());
        assert!((tensor_inner(&g, &g, 1e-10).unwrap().limit.unwrap().re - 1.0).abs() < 1e-9);
    }
}

#[test]
fn exponential_factors_are_fixed_by_differentiation() {
    let e = xi_build(0.1).unwrap().unit();
    let g = ProductVector::with_tail(vec![e.clone(), e.clone()], e.clone());
    let d = dinfty_apply(&g, 2).unwrap();
    assert_eq!(d.explicit, g.explicit);
    let gauss = FactorFunction::new(FactorKind::Gaussian { sigma: 1.0, mean: 0.0 }).unwrap();
    let h = ProductVector::with_tail(vec![gauss.clone()], e);
    let d = dinfty_apply(&h, 1).unwrap();
    assert_eq!(d.explicit[0].kind, FactorKind::Derivative(Box::new(gauss.kind)));
    let chi = ProductVector::with_tail(vec![FactorFunction::indicator()], FactorFunction::indicator());
    assert!(dinfty_apply(&chi, 1).is_err());
}

#[test]
fn normalization_is_one() {
    let c = ThompsonCoeffs::from_triples(vec![1.0, 0.5, 2.0], vec![0.1, 0.2, 0.3], 1.3, &[(1, 2, 3, 0.4)]).unwrap();
    assert!((thompson_normalization_check(&c).unwrap() - 1.0).abs() < 1e-12);
}

fn poly_gauss() -> impl Strategy<Value = PolyGauss> {
    (prop::collection::vec(-2.0..2.0f64, 1..4), 0.1..1.5f64).prop_map(|(coeffs, width)| PolyGauss { coeffs, width })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn laplacian_agrees_with_finite_differences(
        factors in prop::collection::vec(poly_gauss(), 1..4),
        seedx in prop::collection::vec(-1.5..1.5f64, 3),
        which in 0usize..3,
        b in 0.2..2.0f64,
    ) {
        let n = factors.len();
        let f = TestFunction { factors };
        let x = &seedx[..n];
        let op = match which {
            0 => EllipticOperator::NaturalLaplacian,
            1 => EllipticOperator::OrnsteinUhlenbeck(vec![b; n]),
            _ => EllipticOperator::Umemura(b),
        };
        let exact = laplacian_truncated(&op, &f, x).unwrap();
        let fd = laplacian_fd(&op, &f, x, 1e-3).unwrap();
        prop_assert!((exact - fd).abs() < 1e-4 * exact.abs().max(1.0), "{exact} vs {fd}");
    }

    #[test]
    fn thompson_density_is_stationary(
        alpha in prop::collection::vec(0.2..2.0f64, 3),
        mu in prop::collection::vec(0.1..1.0f64, 3),
        nu in 0.2..3.0f64,
        x in prop::collection::vec(-2.0..2.0f64, 3),
    ) {
        let c = ThompsonCoeffs::from_triples(alpha, mu, nu, &[]).unwrap();
        let rep = thompson_equilibrium(&c, &x).unwrap();
        prop_assert!(rep.density > 0.0);
        prop_assert!(rep.viscous_plus_diffusion_residual <= 1e-12);
    }
}

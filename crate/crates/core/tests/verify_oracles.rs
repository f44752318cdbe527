use nalgebra::{DMatrix, DVector};
use robit_core::verify::{
    check_omega_spectrum, check_step4_bound, kappa, kernel_diag_mc, random_omega_instance, trace_mc, AgreementCheck,
    TraceInstance,
};
use robit_core::{Dataset, LambdaDiag, ModelKind, Prior, RngStream};
use statrs::function::gamma::gamma;

#[test]
fn kappa_against_gamma_function() {
    for nu in [2.5, 3.0, 7.0, 30.0] {
        let want = gamma((nu + 1.0) / 2.0) * (nu - 1.0) / (2.0 * std::f64::consts::PI.sqrt() * gamma(nu / 2.0));
        assert!((kappa(nu).unwrap() / want - 1.0).abs() < 1e-12);
    }
}

#[test]
fn zero_design_kernel_is_normal_density() {
    let data = Dataset::new(DMatrix::zeros(1, 1), vec![0]).unwrap();
    let prior = Prior::identity(1);
    let mut rng = RngStream::new(1, 0);
    for k in -5..=5 {
        let b = k as f64;
        let est = kernel_diag_mc(&DVector::from_element(1, b), &data, &prior, ModelKind::Robit { nu: 3.0 }, 100, &mut rng).unwrap();
        let want = (-0.5 * b * b).exp() / (2.0 * std::f64::consts::PI).sqrt();
        assert!((est.estimate - want).abs() <= 3.0 * est.se + 1e-15 * want.max(1.0), "beta={b}");
    }
}

#[test]
fn kernel_estimates_are_positive_and_se_scales() {
    let data = TraceInstance::small(3.0).dataset().unwrap();
    let prior = Prior::identity(1);
    let beta = DVector::from_element(1, 0.4);
    let model = ModelKind::Robit { nu: 3.0 };
    let (mut se_small, mut se_large) = (0.0, 0.0);
    for r in 0..20 {
        let mut rng = RngStream::new(2, r);
        let a = kernel_diag_mc(&beta, &data, &prior, model, 400, &mut rng).unwrap();
        let b = kernel_diag_mc(&beta, &data, &prior, model, 800, &mut rng).unwrap();
        assert!(a.estimate > 0.0 && b.estimate > 0.0);
        se_small += a.se;
        se_large += b.se;
    }
    let ratio = se_large / se_small;
    assert!((ratio / std::f64::consts::FRAC_1_SQRT_2 - 1.0).abs() < 0.2, "{ratio}");
    let mut rng = RngStream::new(3, 0);
    assert!(kernel_diag_mc(&beta, &data, &prior, model, 50, &mut rng).is_err());
}

#[test]
fn trace_is_stable_for_two_degrees_of_freedom() {
    let data = TraceInstance::small(3.0).dataset().unwrap();
    let prior = Prior::identity(1);
    for (nu, seed) in [(3.0, 10), (5.0, 20)] {
        let model = ModelKind::Robit { nu };
        let a = trace_mc(&data, &prior, model, 61, 400, seed).unwrap();
        let b = trace_mc(&data, &prior, model, 122, 400, seed + 1).unwrap();
        assert!(a.estimate.is_finite() && a.estimate > 0.0 && a.se >= 0.0);
        assert!(AgreementCheck::new("doubling", &a, &b).passed, "nu={nu}: {a:?} {b:?}");
    }
}

#[test]
fn trace_on_a_two_dimensional_instance() {
    let inst = TraceInstance::synthetic(3, 2, 3.0, 5).unwrap();
    let data = inst.dataset().unwrap();
    let est = trace_mc(&data, &Prior::identity(2), ModelKind::Robit { nu: 3.0 }, 25, 100, 6).unwrap();
    assert!(est.estimate.is_finite() && est.estimate > 0.0);
    assert_eq!(est.domain_lo.len(), 2);
}

#[test]
fn step4_bound_on_wide_instance() {
    let mut rng = RngStream::new(7, 0);
    let (w, _) = random_omega_instance(3, 6, &mut rng);
    let c = DVector::from_fn(6, |_, _| rng.std_normal());
    let thetas: Vec<_> = (0..1000).map(|_| DVector::from_fn(6, |_, _| 2.0 * rng.std_normal())).collect();
    let r = check_step4_bound(&w, &c, &[1, 0, 1], &thetas, 3.0).unwrap();
    assert!(r.passed);
    assert_eq!(r.points_checked, 1000 * (3 + 2));
}

#[test]
fn omega_spectrum_edge_cases() {
    let c = check_omega_spectrum(&DMatrix::zeros(2, 5), &LambdaDiag::ones(2)).unwrap();
    assert!(c.passed);
    assert_eq!(c.unit_eigenvalues, 5);
    let mut rng = RngStream::new(8, 0);
    let (w, l) = random_omega_instance(4, 9, &mut rng);
    let c = check_omega_spectrum(&w, &l).unwrap();
    assert!(c.passed);
    assert_eq!(c.unit_eigenvalues, 5);
}

//! The two worked examples end to end through the public API.

use approx::assert_abs_diff_eq;
use manifold_sde::center::{build_reduced_system, lyapunov_rate, spectral_split};
use manifold_sde::characteristics::{
    build_integral_surface, evaluate_surface, generator_field, zero_level_check, CharacteristicField, Generator,
    InitialCurve, SurfaceGrid,
};
use manifold_sde::fields::{Polynomial, VectorField};
use manifold_sde::invariance::{
    invariance_residuals, restrict_system, tangency_drift, verify_invariance, AxisBox, CheckScope, Verdict,
};
use manifold_sde::registry;
use manifold_sde::sde::{convert_calculus, drift_correction, euler_maruyama_step, Calculus};

#[test]
fn example1_stratonovich_converts_to_the_printed_ito_form() {
    let strat = registry::system::<f64>("example1-strat").unwrap().system;
    let ito = convert_calculus(&strat, Calculus::Ito).unwrap();
    let expected = registry::system::<f64>("example1-ito").unwrap().system;
    assert_eq!(ito.drift().as_polynomial(), expected.drift().as_polynomial());
    assert_eq!(ito.describe(), expected.describe());
    let back = convert_calculus(&ito, Calculus::Stratonovich).unwrap();
    assert_eq!(back.drift().as_polynomial(), strat.drift().as_polynomial());
}

#[test]
fn example1_ito_step_from_one_one() {
    let sys = registry::system::<f64>("example1-ito").unwrap().system;
    let x = euler_maruyama_step(&sys, &[1.0, 1.0], &[0.0, 0.0], 0.01).unwrap();
    assert_abs_diff_eq!(x[0], 0.99, epsilon = 1e-15);
    assert_abs_diff_eq!(x[1], 0.98, epsilon = 1e-15);
}

#[test]
fn example1_energy_rate_matches_completed_square() {
    let sys = registry::system::<f64>("example1-ito").unwrap().system;
    assert_abs_diff_eq!(lyapunov_rate(&sys, &[1.0, 1.0]).unwrap(), -2.0, epsilon = 1e-15);
    assert_abs_diff_eq!(lyapunov_rate(&sys, &[0.0, 0.5]).unwrap(), -0.9375, epsilon = 1e-15);
}

#[test]
fn example1_reduces_to_the_printed_scalar_equation() {
    let entry = registry::system::<f64>("example1-ito").unwrap();
    let a = entry.linear.unwrap();
    let split = spectral_split(&a, 1e-9).unwrap();
    assert_eq!(split.k(), 1);
    assert_eq!(split.center_basis().as_slice(), &[0.0, 1.0]);
    assert_eq!(split.stable_basis().as_slice(), &[1.0, 0.0]);
    let reduced = build_reduced_system(&entry.system, &a, &split).unwrap();
    assert_eq!(reduced.describe(), vec!["dy = (-2 - y^3) dt + y dW".to_string()]);
    let target = registry::system::<f64>("example1-reduced").unwrap().system;
    assert_eq!(reduced.inner().drift().as_polynomial(), target.drift().as_polynomial());
    assert_eq!(reduced.inner().drift().eval(&[1.0]).unwrap(), vec![-3.0]);
}

#[test]
fn example2_correction_and_tangency_drift() {
    let sys = registry::system::<f64>("example2").unwrap().system;
    let (x, y) = (1.3, -0.4);
    let c = drift_correction(&sys, &[x, y]).unwrap();
    assert_abs_diff_eq!(c[0], x, epsilon = 1e-15);
    assert_abs_diff_eq!(c[1], 2.0 * x + y, epsilon = 1e-15);
    let mu = tangency_drift(&sys, &[x, y]).unwrap();
    assert_abs_diff_eq!(mu[0], 0.0, epsilon = 1e-15);
    assert_abs_diff_eq!(mu[1], x + y, epsilon = 1e-15);
}

#[test]
fn example2_residuals_at_one_zero() {
    let sys = registry::system::<f64>("example2").unwrap().system;
    let m = registry::manifold::<f64>("example2-log").unwrap();
    let r = invariance_residuals(&sys, &m, &[1.0, 0.0]).unwrap();
    assert_abs_diff_eq!(r.mu, 1.0, epsilon = 1e-15);
    assert_eq!(r.columns, vec![0.0, 0.0]);
}

#[test]
fn example2_manifold_is_tangent_to_the_noise_but_not_the_drift() {
    let sys = registry::system::<f64>("example2").unwrap().system;
    let m = registry::manifold::<f64>("example2-log").unwrap();
    let bounds = AxisBox::new(&[(0.5, 2.0), (-2.0, 2.0)]).unwrap();
    let noise = verify_invariance(&sys, &m, &bounds, 1000, 3, 1e-12, CheckScope::DiffusionOnly).unwrap();
    assert_eq!(noise.verdict, Verdict::Invariant);
    assert_eq!(noise.n_samples, 1000);
    let all = verify_invariance(&sys, &m, &bounds, 1000, 3, 1e-12, CheckScope::All).unwrap();
    assert_eq!(all.verdict, Verdict::NotInvariant);
    for p in &all.points {
        let (x, y) = (p.x[0], p.x[1]);
        assert_abs_diff_eq!(p.mu_res.abs(), ((x + y) / x).abs(), epsilon = 1e-12);
    }
}

#[test]
fn example2_restricted_to_its_graph() {
    let sys = registry::system::<f64>("example2").unwrap().system;
    let m = registry::manifold::<f64>("example2-log").unwrap();
    let r = restrict_system(&sys, &m, &[0]).unwrap();
    assert_eq!(r.dim(), 1);
    assert_abs_diff_eq!(r.drift().eval(&[2.0]).unwrap()[0], 2.0, epsilon = 1e-12);
}

#[test]
fn example2_surface_from_the_first_noise_column() {
    let sys = registry::system::<f64>("example2").unwrap().system;
    let field = CharacteristicField::homogeneous(generator_field(&sys, Generator::Column(0)).unwrap());
    let s = |i: usize| Polynomial::<f64>::variable(1, i);
    let curve = InitialCurve::from_polynomials(
        AxisBox::new(&[(-1.0, 1.0)]).unwrap(),
        vec![Polynomial::constant(1, 1.0), s(0)],
        s(0),
    )
    .unwrap();
    let surface = build_integral_surface(&field, &curve, &SurfaceGrid::new(41, 1.0, 1e-3)).unwrap();
    assert!(zero_level_check(&surface));
    let e = std::f64::consts::E;
    assert_abs_diff_eq!(evaluate_surface(&surface, &[e, e]).unwrap(), 0.0, epsilon = 1e-6);
    assert_abs_diff_eq!(evaluate_surface(&surface, &[1.0, 0.5]).unwrap(), 0.5, epsilon = 1e-6);
}

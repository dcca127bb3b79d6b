//! Candidate manifolds `M = {G = 0}`, the tangency residuals that decide
//! almost-sure local invariance, restriction of a system to an invariant
//! graph, and a Monte Carlo measure of how far discrete paths escape from `M`.

mod escape;
mod manifold;
mod residuals;
mod restrict;
mod sampling;

pub use escape::{escape_diagnostic, EscapeQuantiles, EscapeStats};
pub use manifold::{AxisBox, GraphManifold};
pub use residuals::{
    invariance_residuals, tangency_drift, verify_invariance, CheckScope, InvarianceReport, PointRecord, Residuals,
    Verdict, DEFAULT_INVARIANCE_TOL,
};
pub use restrict::{restrict_system, ChartLift};
pub use sampling::{sample_manifold_points, ManifoldSample, ON_MANIFOLD_TOL};

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use proptest::prelude::*;

    use super::*;
    use crate::error::Error;
    use crate::fields::{
        MatrixField, Polynomial, PolynomialMatrixField, PolynomialVectorField, ScalarFunction, VectorField,
    };
    use crate::registry;
    use crate::sde::{Calculus, SdeSystem};

    fn p(pairs: &[(f64, &[u32])]) -> Polynomial<f64> {
        Polynomial::from_pairs(2, pairs).unwrap()
    }

    fn circle() -> GraphManifold<f64> {
        registry::manifold("unit-circle").unwrap()
    }

    fn deterministic(drift: PolynomialVectorField<f64>) -> SdeSystem<f64> {
        SdeSystem::polynomial(drift, PolynomialMatrixField::zero(2, 1), Calculus::Ito).unwrap()
    }

    fn rotation() -> SdeSystem<f64> {
        deterministic(PolynomialVectorField::new(vec![p(&[(-1.0, &[0, 1])]), p(&[(1.0, &[1, 0])])]).unwrap())
    }

    fn radial() -> SdeSystem<f64> {
        deterministic(PolynomialVectorField::new(vec![p(&[(1.0, &[1, 0])]), p(&[(1.0, &[0, 1])])]).unwrap())
    }

    fn example2() -> SdeSystem<f64> {
        registry::system("example2").unwrap().system
    }

    fn log_graph() -> GraphManifold<f64> {
        registry::manifold("example2-log").unwrap()
    }

    #[test]
    fn tangency_drift_constant_noise_is_the_drift() {
        let sys = SdeSystem::polynomial(
            registry::example1_ito_nonlinear(),
            PolynomialMatrixField::constant(&nalgebra::DMatrix::from_element(2, 2, 0.3)).unwrap(),
            Calculus::Ito,
        )
        .unwrap();
        let x = [0.4, -1.2];
        assert_eq!(tangency_drift(&sys, &x).unwrap(), sys.drift().eval(&x).unwrap());
    }

    #[test]
    fn tangency_drift_example2() {
        for x in [[1.0, 0.0], [2.0, 3.0], [0.5, -0.25]] {
            let mu = tangency_drift(&example2(), &x).unwrap();
            assert!(mu[0].abs() < 1e-15);
            assert!((mu[1] - (x[0] + x[1])).abs() < 1e-15);
        }
    }

    #[test]
    fn tangency_drift_example1_recovers_stratonovich_form() {
        let sys = SdeSystem::polynomial(
            registry::example1_ito_nonlinear(),
            registry::example1_diffusion(),
            Calculus::Ito,
        )
        .unwrap();
        let strat = registry::example1_strat_nonlinear::<f64>();
        for x in [[1.0, 1.0], [0.3, -0.8], [-2.0, 0.5]] {
            let mu = tangency_drift(&sys, &x).unwrap();
            let expected = strat.eval(&x).unwrap();
            for (a, b) in mu.iter().zip(&expected) {
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn tangency_drift_refuses_stratonovich() {
        let sys = registry::system::<f64>("example1-strat").unwrap().system;
        assert!(matches!(
            tangency_drift(&sys, &[0.0, 0.0]),
            Err(Error::CalculusMismatch { .. })
        ));
    }

    #[test]
    fn circle_residuals() {
        for k in 0..16 {
            let th = k as f64 * 0.4;
            let x = [th.cos(), th.sin()];
            assert!(invariance_residuals(&rotation(), &circle(), &x).unwrap().mu.abs() < 1e-15);
            let r = invariance_residuals(&radial(), &circle(), &x).unwrap().mu;
            assert!((r - 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn example2_residuals_at_one_zero() {
        let r = invariance_residuals(&example2(), &log_graph(), &[1.0, 0.0]).unwrap();
        assert_eq!(r.columns, vec![0.0, 0.0]);
        assert_eq!(r.mu, 1.0);
        assert!(matches!(
            invariance_residuals(&example2(), &log_graph(), &[0.0, 0.0]),
            Err(Error::OutsideDomain(_))
        ));
    }

    #[test]
    fn sampled_points_lie_on_the_manifold() {
        let b = AxisBox::new(&[(-2.0, 2.0), (-2.0, 2.0)]).unwrap();
        let s = sample_manifold_points(&circle(), &b, 200, 4).unwrap();
        assert_eq!(s.points.len(), 200);
        assert!(!s.short);
        for x in &s.points {
            assert!((x[0] * x[0] + x[1] * x[1] - 1.0).abs() <= 1e-10);
        }
        let b2 = AxisBox::new(&[(0.5, 2.0), (-2.0, 2.0)]).unwrap();
        let s2 = sample_manifold_points(&log_graph(), &b2, 200, 4).unwrap();
        for x in &s2.points {
            assert!((x[1] / x[0] - x[0].ln()).abs() <= 1e-10);
        }
    }

    #[test]
    fn empty_zero_set_is_an_error() {
        let g = p(&[(1.0, &[2, 0]), (1.0, &[0, 2]), (1.0, &[0, 0])]);
        let m = GraphManifold::new(
            "no-zeros",
            Arc::new(g),
            AxisBox::new(&[(-2.0, 2.0), (-2.0, 2.0)]).unwrap(),
        )
        .unwrap();
        let err = sample_manifold_points(&m, m.domain(), 10, 0).unwrap_err();
        assert_eq!(err, Error::NoSignChange { attempts: 1000 });
    }

    #[test]
    fn sampling_box_must_fit_the_domain() {
        let b = AxisBox::new(&[(0.0, 2.0), (-2.0, 2.0)]).unwrap();
        assert!(sample_manifold_points(&log_graph(), &b, 10, 0).is_err());
    }

    #[test]
    fn verify_circle() {
        let b = AxisBox::new(&[(-2.0, 2.0), (-2.0, 2.0)]).unwrap();
        let rep = verify_invariance(&rotation(), &circle(), &b, 100, 1, 1e-9, CheckScope::All).unwrap();
        assert_eq!(rep.verdict, Verdict::Invariant);
        assert!(rep.max_mu_residual <= 1e-12);
        let rep = verify_invariance(&radial(), &circle(), &b, 100, 1, 1e-9, CheckScope::All).unwrap();
        assert_eq!(rep.verdict, Verdict::NotInvariant);
        assert!((rep.max_mu_residual - 2.0).abs() <= 1e-9);
        let max_recorded = rep.points.iter().map(|r| r.mu_res.abs()).fold(0.0, f64::max);
        assert_eq!(max_recorded, rep.max_mu_residual);
    }

    #[test]
    fn verify_example2_diffusion_columns() {
        let b = AxisBox::new(&[(0.5, 2.0), (-2.0, 2.0)]).unwrap();
        let rep = verify_invariance(&example2(), &log_graph(), &b, 1000, 3, 1e-12, CheckScope::DiffusionOnly).unwrap();
        assert_eq!(rep.n_samples, 1000);
        assert_eq!(rep.verdict, Verdict::Invariant);
        assert!(rep.max_column_residuals.iter().all(|&c| c <= 1e-12));
        let rep_all = verify_invariance(&example2(), &log_graph(), &b, 50, 3, 1e-8, CheckScope::All).unwrap();
        assert_eq!(rep_all.verdict, Verdict::NotInvariant);
    }

    #[test]
    fn restrict_example2_to_the_log_graph() {
        let reduced = restrict_system(&example2(), &log_graph(), &[0]).unwrap();
        assert_eq!(reduced.dim(), 1);
        assert_eq!(reduced.noise_dim(), 2);
        assert!((reduced.drift().eval(&[2.0]).unwrap()[0] - 2.0).abs() < 1e-12);
        let b = reduced.diffusion().eval(&[1.5]).unwrap();
        assert!((b[(0, 0)] - 1.5).abs() < 1e-12 && (b[(0, 1)] - 1.5).abs() < 1e-12);
        // outside the chart the reduced drift is NaN
        assert!(reduced.drift().eval(&[0.01]).unwrap()[0].is_nan());
    }

    #[test]
    fn lift_lands_on_the_manifold() {
        let lift = ChartLift::new(log_graph(), &[0]).unwrap();
        for k in 0..50 {
            let x = 0.1 + 0.3 * k as f64;
            let full = lift.lift(&[x]).unwrap();
            assert!(log_graph().value(&full).unwrap().abs() <= 1e-10);
            assert!((full[1] - x * x.ln()).abs() <= 1e-10 * (1.0 + full[1].abs()));
        }
        let c = ChartLift::new(circle(), &[0]).unwrap();
        let up = c.lift(&[0.6]).unwrap();
        assert!((up[1] - 0.8).abs() < 1e-12);
        assert!(matches!(c.lift(&[1.5]), Err(Error::RootBracket(_))));
    }

    #[test]
    fn restrict_decoupled_linear_subspace() {
        // F = (-x^3, y), B = 0, G = y
        let sys = deterministic(PolynomialVectorField::new(vec![p(&[(-1.0, &[3, 0])]), p(&[(1.0, &[0, 1])])]).unwrap());
        let m = GraphManifold::new(
            "y=0",
            Arc::new(p(&[(1.0, &[0, 1])])),
            AxisBox::new(&[(-5.0, 5.0), (-5.0, 5.0)]).unwrap(),
        )
        .unwrap();
        let r = restrict_system(&sys, &m, &[0]).unwrap();
        for x in [-1.0, 0.5, 2.0] {
            assert!((r.drift().eval(&[x]).unwrap()[0] + x * x * x).abs() < 1e-12);
            assert_eq!(r.diffusion().eval(&[x]).unwrap()[(0, 0)], 0.0);
        }
    }

    #[test]
    fn escape_is_zero_for_the_zero_system() {
        let sys = deterministic(PolynomialVectorField::zero(2));
        let s = escape_diagnostic(&sys, &circle(), &[1.0, 0.0], 0.5, 1e-2, 20, 0).unwrap();
        assert!(s.series.iter().all(|q| q.max == 0.0));
        assert_eq!(s.stopped, 0);
    }

    #[test]
    fn euler_drift_off_circle_is_first_order() {
        let m = |h| {
            escape_diagnostic(&rotation(), &circle(), &[1.0, 0.0], 1.0, h, 2, 0)
                .unwrap()
                .terminal
                .max
        };
        let ratio = m(1e-2) / m(1e-3);
        assert!((8.0..12.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn escape_requires_a_start_on_the_manifold() {
        assert!(matches!(
            escape_diagnostic(&rotation(), &circle(), &[0.5, 0.0], 1.0, 1e-2, 2, 0),
            Err(Error::NotOnManifold { .. })
        ));
    }

    struct Scaled(Polynomial<f64>, f64);

    impl ScalarFunction<f64> for Scaled {
        fn dim(&self) -> usize {
            2
        }
        fn value(&self, x: &[f64]) -> crate::Result<f64> {
            Ok(self.1 * self.0.eval(x))
        }
        fn gradient(&self, x: &[f64]) -> crate::Result<Vec<f64>> {
            Ok(self.0.gradient().iter().map(|d| self.1 * d.eval(x)).collect())
        }
    }

    proptest! {
        #[test]
        fn residuals_scale_linearly_with_g(x in 0.1f64..5.0, y in -3.0f64..3.0) {
            let base = p(&[(1.0, &[2, 0]), (-1.0, &[1, 1]), (2.0, &[0, 1])]);
            let dom = AxisBox::new(&[(-10.0, 10.0), (-10.0, 10.0)]).unwrap();
            let m1 = GraphManifold::new("g", Arc::new(Scaled(base.clone(), 1.0)), dom.clone()).unwrap();
            let m2 = GraphManifold::new("2g", Arc::new(Scaled(base, 2.0)), dom).unwrap();
            let r1 = invariance_residuals(&example2(), &m1, &[x, y]).unwrap();
            let r2 = invariance_residuals(&example2(), &m2, &[x, y]).unwrap();
            prop_assert_eq!(2.0 * r1.mu, r2.mu);
            for (a, b) in r1.columns.iter().zip(&r2.columns) {
                prop_assert_eq!(2.0 * a, *b);
            }
        }
    }

    #[test]
    fn verdict_is_invariant_under_scaling_g() {
        let b = AxisBox::new(&[(-2.0, 2.0), (-2.0, 2.0)]).unwrap();
        let unit = p(&[(1.0, &[2, 0]), (1.0, &[0, 2]), (-1.0, &[0, 0])]);
        let m1 = GraphManifold::new("c", Arc::new(unit.clone()), b.clone()).unwrap();
        let m2 = GraphManifold::new("2c", Arc::new(unit.scale(2.0)), b.clone()).unwrap();
        for sys in [rotation(), radial()] {
            let v1 = verify_invariance(&sys, &m1, &b, 50, 9, 1e-9, CheckScope::All).unwrap();
            let v2 = verify_invariance(&sys, &m2, &b, 50, 9, 2e-9, CheckScope::All).unwrap();
            assert_eq!(v1.verdict, v2.verdict);
        }
        let _ = MatrixField::<f64>::dim(&PolynomialMatrixField::<f64>::zero(2, 1));
    }
}

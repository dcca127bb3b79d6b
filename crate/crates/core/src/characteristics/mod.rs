//! Method of characteristics for first-order linear PDEs
//! `a(x) . grad u = c(x)`: characteristic curves from initial data, the
//! integral surface they sweep out, its inversion to a function `u(x)`, and the
//! invariance PDE `V . grad G = 0` for a tangency vector `V`.

mod check;
mod field;
mod pde;
mod surface;

pub use check::{non_characteristic_check, NonCharacteristicReport, DEFAULT_ANGLE_THRESHOLD, TANGENT_STEP};
pub use field::{integrate_characteristic, CharacteristicCurve, CharacteristicField, InitialCurve};
pub use pde::{
    generator_field, generators, solve_invariance_pde, zero_level_points, ConsistencyReport, Generator,
    GeneratorResidual, InvariancePdeSolution, PdeSetup, SurfaceFunction, SURFACE_GRADIENT_STEP,
};
pub use surface::{
    build_integral_surface, evaluate_surface, zero_level_check, IntegralSurface, SurfaceGrid, SurfaceLocation,
};

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use proptest::prelude::*;

    use super::*;
    use crate::error::Error;
    use crate::fields::{FnVectorField, Polynomial, PolynomialMatrixField, PolynomialVectorField};
    use crate::invariance::AxisBox;
    use crate::registry;
    use crate::sde::{Calculus, SdeSystem};

    fn example2_field() -> CharacteristicField<f64> {
        let a = PolynomialVectorField::new(vec![
            Polynomial::from_pairs(2, &[(1.0, &[1, 0])]).unwrap(),
            Polynomial::from_pairs(2, &[(1.0, &[1, 0]), (1.0, &[0, 1])]).unwrap(),
        ])
        .unwrap();
        CharacteristicField::homogeneous(Arc::new(a))
    }

    /// `Gamma = (1, s, s)` on `[lo, hi]`.
    fn paper_curve(lo: f64, hi: f64) -> InitialCurve<f64> {
        let s = Polynomial::from_pairs(1, &[(1.0, &[1])]).unwrap();
        InitialCurve::from_polynomials(
            AxisBox::new(&[(lo, hi)]).unwrap(),
            vec![Polynomial::constant(1, 1.0), s.clone()],
            s,
        )
        .unwrap()
    }

    fn example2_surface(s_count: usize, t_start: f64) -> IntegralSurface<f64> {
        let grid = SurfaceGrid::new(s_count, 1.0, 1e-3).with_t_start(t_start);
        build_integral_surface(&example2_field(), &paper_curve(-1.0, 1.0), &grid).unwrap()
    }

    #[test]
    fn constant_field_gives_straight_lines() {
        let a = PolynomialVectorField::new(vec![Polynomial::constant(2, 1.0), Polynomial::zero(2)]).unwrap();
        let f = CharacteristicField::homogeneous(Arc::new(a));
        let c = integrate_characteristic(&f, &[0.0, 0.0], 3.5, 1.0, 0.1).unwrap();
        assert_eq!(c.times.len(), 11);
        for k in 0..11 {
            assert!((c.point(k)[0] - 0.1 * k as f64).abs() < 1e-14);
            assert_eq!(c.point(k)[1], 0.0);
            assert_eq!(c.values[k], 3.5);
        }
    }

    #[test]
    fn example2_characteristic_closed_form() {
        let c = integrate_characteristic(&example2_field(), &[1.0, 0.0], 0.0, 1.0, 1e-3).unwrap();
        let e = std::f64::consts::E;
        let end = c.point(c.times.len() - 1);
        assert!((end[0] - e).abs() <= 1e-10 && (end[1] - e).abs() <= 1e-10);
        let back = integrate_characteristic(&example2_field(), &[1.0, 0.0], 0.0, -0.5, 1e-3).unwrap();
        let last = back.point(back.times.len() - 1);
        assert!((last[0] - (-0.5f64).exp()).abs() <= 1e-10);
        assert!((last[1] + 0.5 * (-0.5f64).exp()).abs() <= 1e-10);
    }

    #[test]
    fn rk4_is_fourth_order() {
        let err = |h: f64| {
            let c = integrate_characteristic(&example2_field(), &[1.0, 0.0], 0.0, 1.0, h).unwrap();
            let end = c.point(c.times.len() - 1);
            let e = std::f64::consts::E;
            ((end[0] - e).powi(2) + (end[1] - e).powi(2)).sqrt()
        };
        let ratio = err(0.1) / err(0.05);
        assert!(ratio >= 12.0, "ratio {ratio}");
    }

    #[test]
    fn blow_up_is_an_error_for_a_single_curve() {
        let a = PolynomialVectorField::new(vec![Polynomial::from_pairs(1, &[(1.0, &[2])]).unwrap()]).unwrap();
        let f = CharacteristicField::homogeneous(Arc::new(a));
        let r = integrate_characteristic(&f, &[1.0], 0.0, 2.0, 1e-2);
        assert!(matches!(r, Err(Error::NonFinite { .. })));
    }

    #[test]
    fn non_characteristic_paper_curve_passes() {
        let rep = non_characteristic_check(&example2_field(), &paper_curve(-1.0, 1.0), 201, 1e-3).unwrap();
        assert!(rep.passed);
        // V = (1, 1 + s, 0), tangent (0, 1, 1): smallest angle at s = 1
        let expected = (2.0 / 10f64.sqrt()).acos();
        assert!((rep.min_angle - expected).abs() < 1e-8);
        assert_eq!(rep.at, vec![1.0]);
    }

    #[test]
    fn curve_along_a_characteristic_fails() {
        let curve = InitialCurve::new(
            AxisBox::new(&[(0.0, 1.0)]).unwrap(),
            2,
            |s: &[f64]| vec![s[0].exp(), s[0] * s[0].exp()],
            |_| 0.0,
        )
        .unwrap();
        let rep = non_characteristic_check(&example2_field(), &curve, 50, 1e-3).unwrap();
        assert!(!rep.passed);
        assert!(rep.min_angle < 1e-6);
        let grid = SurfaceGrid::new(10, 0.5, 1e-2);
        assert!(matches!(
            build_integral_surface(&example2_field(), &curve, &grid),
            Err(Error::Characteristic { .. })
        ));
    }

    #[test]
    fn value_component_enters_the_angle() {
        // position tangent parallel to a = (1, 0), but h' = 1 while c = 0
        let a = PolynomialVectorField::new(vec![Polynomial::constant(2, 1.0), Polynomial::zero(2)]).unwrap();
        let f = CharacteristicField::homogeneous(Arc::new(a));
        let curve = InitialCurve::new(
            AxisBox::new(&[(0.0, 1.0)]).unwrap(),
            2,
            |s: &[f64]| vec![s[0], 0.0],
            |s| s[0],
        )
        .unwrap();
        let rep = non_characteristic_check(&f, &curve, 20, 1e-3).unwrap();
        assert!(rep.passed);
        assert!((rep.min_angle - std::f64::consts::FRAC_PI_4).abs() < 1e-9);
    }

    #[test]
    fn zero_field_and_degenerate_tangent_are_errors() {
        let zero = CharacteristicField::homogeneous(Arc::new(PolynomialVectorField::<f64>::zero(2)));
        assert!(matches!(
            non_characteristic_check(&zero, &paper_curve(-1.0, 1.0), 10, 1e-3),
            Err(Error::ZeroFieldVector(_))
        ));
        let point = InitialCurve::new(
            AxisBox::new(&[(0.0, 1.0)]).unwrap(),
            2,
            |_: &[f64]| vec![1.0, 1.0],
            |_| 0.0,
        )
        .unwrap();
        assert!(matches!(
            non_characteristic_check(&example2_field(), &point, 10, 1e-3),
            Err(Error::DegenerateTangent(_))
        ));
    }

    #[test]
    fn surface_matches_the_closed_form() {
        let surf = example2_surface(201, -0.5);
        let mut worst: f64 = 0.0;
        for node in 0..surf.node_count() {
            let s = surf.s_node(node)[0];
            let (lo, hi) = surf.valid_range(node);
            assert_eq!((lo, hi), (0, surf.t_grid().len() - 1));
            for k in lo..=hi {
                let t = surf.t_grid()[k];
                let x = surf.point(node, k);
                worst = worst
                    .max((x[0] - t.exp()).abs())
                    .max((x[1] - (t + s) * t.exp()).abs())
                    .max((surf.value(node, k) - s).abs());
            }
            // c = 0: u is transported exactly
            assert!((lo..=hi).all(|k| surf.value(node, k) == s));
        }
        assert!(worst <= 1e-8, "max error {worst}");
        assert!(surf.truncated().is_empty());
    }

    #[test]
    fn t_zero_slice_is_the_initial_curve() {
        let surf = example2_surface(21, 0.0);
        let k0 = surf.t_zero();
        assert_eq!(surf.t_grid()[k0], 0.0);
        for node in 0..surf.node_count() {
            let s = surf.s_node(node)[0];
            let x = surf.point(node, k0);
            assert!((x[0] - 1.0).abs() <= 1e-12 && (x[1] - s).abs() <= 1e-12);
        }
    }

    #[test]
    fn evaluate_surface_inverts_the_closed_form() {
        let surf = example2_surface(201, 0.0);
        let e = std::f64::consts::E;
        assert!(evaluate_surface(&surf, &[e, e]).unwrap().abs() <= 1e-6);
        assert!((evaluate_surface(&surf, &[1.0, 0.5]).unwrap() - 0.5).abs() <= 1e-6);
        for s in [-0.9, -0.33, 0.0, 0.71] {
            assert!((evaluate_surface(&surf, &[1.0, s]).unwrap() - s).abs() <= 1e-8);
        }
        // interior nodes round-trip
        for node in (3..surf.node_count() - 3).step_by(17) {
            for k in (5..surf.t_grid().len() - 5).step_by(97) {
                let got = evaluate_surface(&surf, surf.point(node, k)).unwrap();
                assert!((got - surf.value(node, k)).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn evaluate_off_the_footprint_fails() {
        let surf = example2_surface(41, 0.0);
        assert!(matches!(
            evaluate_surface(&surf, &[0.5, 0.0]),
            Err(Error::OutsideFootprint(_))
        ));
        assert!(matches!(
            evaluate_surface(&surf, &[2.0, 10.0]),
            Err(Error::OutsideFootprint(_))
        ));
    }

    #[test]
    fn evaluate_on_the_log_graph() {
        let surf = example2_surface(201, -0.5);
        for i in 0..200 {
            let x = 0.7 + 1.8 * i as f64 / 199.0;
            let g = evaluate_surface(&surf, &[x, x * x.ln()]).unwrap();
            assert!(g.abs() <= 1e-5, "G = {g} at x = {x}");
        }
    }

    #[test]
    fn zero_level() {
        let grid = SurfaceGrid::new(11, 0.2, 1e-2);
        let surf = build_integral_surface(&example2_field(), &paper_curve(-1.0, 1.0), &grid).unwrap();
        assert!(zero_level_check(&surf));
        let s = Polynomial::from_pairs(1, &[(1.0, &[1])]).unwrap();
        let shifted = InitialCurve::from_polynomials(
            AxisBox::new(&[(-1.0, 1.0)]).unwrap(),
            vec![Polynomial::constant(1, 1.0), s.clone()],
            &s + &Polynomial::constant(1, 2.0),
        )
        .unwrap();
        let surf = build_integral_surface(&example2_field(), &shifted, &grid).unwrap();
        assert!(!zero_level_check(&surf));
    }

    #[test]
    fn blown_up_characteristics_are_cut_off() {
        // x' = x^2 from x = s blows up at t = 1/s
        let a = FnVectorField::new(2, |x: &[f64], out: &mut [f64]| {
            out[0] = x[0] * x[0];
            out[1] = 1.0;
        });
        let f = CharacteristicField::homogeneous(Arc::new(a));
        let curve = InitialCurve::new(
            AxisBox::new(&[(0.5, 4.0)]).unwrap(),
            2,
            |s: &[f64]| vec![s[0], 0.0],
            |s| s[0],
        )
        .unwrap();
        let surf = build_integral_surface(&f, &curve, &SurfaceGrid::new(8, 1.0, 1e-2)).unwrap();
        assert!(!surf.truncated().is_empty());
        assert!(!surf.truncated().contains(&0));
        let last = surf.node_count() - 1;
        assert!(surf.valid_range(last).1 < surf.t_grid().len() - 1);
        assert_eq!(surf.valid_range(0), (0, surf.t_grid().len() - 1));
    }

    #[test]
    fn surface_is_independent_of_thread_count() {
        let build = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| example2_surface(31, -0.2))
        };
        assert_eq!(build(1), build(4));
    }

    #[test]
    fn csv_columns() {
        let grid = SurfaceGrid::new(4, 0.03, 1e-2);
        let surf = build_integral_surface(&example2_field(), &paper_curve(-1.0, 1.0), &grid).unwrap();
        let mut buf = Vec::new();
        surf.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("s,t,x1,x2,u"));
        assert_eq!(lines.next(), Some("-1,0,1,-1,-1"));
        assert_eq!(text.lines().count(), 1 + 4 * 4);
    }

    #[test]
    fn two_parameter_initial_data() {
        // a = (1, 0, 0), Gamma = (0, s1, s2), u = s1 + s2: u(x) = y + z
        let a = PolynomialVectorField::new(vec![
            Polynomial::constant(3, 1.0),
            Polynomial::zero(3),
            Polynomial::zero(3),
        ])
        .unwrap();
        let f = CharacteristicField::homogeneous(Arc::new(a));
        let curve = InitialCurve::new(
            AxisBox::new(&[(-1.0, 1.0), (-1.0, 1.0)]).unwrap(),
            3,
            |s: &[f64]| vec![0.0, s[0], s[1]],
            |s| s[0] + s[1],
        )
        .unwrap();
        let surf = build_integral_surface(&f, &curve, &SurfaceGrid::new(9, 1.0, 0.05)).unwrap();
        let u = evaluate_surface(&surf, &[0.37, 0.2, -0.55]).unwrap();
        assert!((u - (0.2 - 0.55)).abs() < 1e-10);
    }

    #[test]
    fn solve_example2_along_the_first_column() {
        let sys = registry::system::<f64>("example2").unwrap().system;
        let setup = PdeSetup::new(SurfaceGrid::new(201, 1.0, 1e-3).with_t_start(-0.5));
        let sol = solve_invariance_pde(&sys, Generator::Column(0), &paper_curve(-1.0, 1.0), &setup).unwrap();
        let rep = &sol.report;
        assert!(rep.zero_level && rep.non_characteristic.passed);
        assert_eq!(rep.points.len(), 200);
        for x in &rep.points {
            assert!((x[1] / x[0] - x[0].ln()).abs() <= 1e-5);
        }
        let by = |g: &str| rep.residuals.iter().find(|r| r.generator == g).unwrap();
        assert!(by("B1").driver && by("B1").max_abs <= 1e-5);
        assert!(by("B2").max_abs <= 1e-5);
        // mu = (0, x + y) is not tangent: residual (x + y)/x on the zero level
        let mu_expected = rep
            .points
            .iter()
            .map(|x| ((x[0] + x[1]) / x[0]).abs())
            .fold(0.0, f64::max);
        // points on the edge of the footprint have no central difference
        assert!(rep.skipped <= 2);
        assert!(by("mu").max_abs <= mu_expected + 1e-4 && by("mu").max_abs > 1.9);
        assert!(sol.manifold.value(&[1.5, 1.5 * 1.5f64.ln()]).unwrap().abs() <= 1e-5);
    }

    #[test]
    fn zero_generator_is_rejected() {
        let sys = SdeSystem::polynomial(
            PolynomialVectorField::zero(2),
            PolynomialMatrixField::zero(2, 1),
            Calculus::Ito,
        )
        .unwrap();
        let setup = PdeSetup::new(SurfaceGrid::new(11, 0.1, 1e-2));
        let r = solve_invariance_pde(&sys, Generator::Column(0), &paper_curve(-1.0, 1.0), &setup);
        assert!(matches!(r, Err(Error::ZeroFieldVector(_))));
    }

    #[test]
    fn shifted_data_has_no_zero_level() {
        let sys = registry::system::<f64>("example2").unwrap().system;
        let s = Polynomial::from_pairs(1, &[(1.0, &[1])]).unwrap();
        let curve = InitialCurve::from_polynomials(
            AxisBox::new(&[(-1.0, 1.0)]).unwrap(),
            vec![Polynomial::constant(1, 1.0), s.clone()],
            &s + &Polynomial::constant(1, 2.0),
        )
        .unwrap();
        let setup = PdeSetup::new(SurfaceGrid::new(11, 0.1, 1e-2));
        let err = solve_invariance_pde(&sys, Generator::Column(1), &curve, &setup).unwrap_err();
        assert_eq!(err, Error::NoZeroLevel);
        assert_eq!(err.to_string(), "initial data produces no zero level set");
    }

    #[test]
    fn generator_names() {
        assert_eq!("mu".parse::<Generator>().unwrap(), Generator::Mu);
        assert_eq!("B2".parse::<Generator>().unwrap(), Generator::Column(1));
        assert!("B0".parse::<Generator>().is_err());
        assert_eq!(Generator::Column(0).to_string(), "B1");
        let sys = registry::system::<f64>("example2").unwrap().system;
        let mu = generator_field(&sys, Generator::Mu).unwrap();
        assert_eq!(mu.eval(&[2.0, 1.0]).unwrap(), vec![0.0, 3.0]);
    }

    proptest! {
        #[test]
        fn shrinking_the_threshold_keeps_a_pass(lo in -2.0f64..0.0, len in 0.5f64..2.0, th in 1e-6f64..0.5, shrink in 0.0f64..1.0) {
            let curve = paper_curve(lo, lo + len);
            let field = example2_field();
            let rep = non_characteristic_check(&field, &curve, 33, th).unwrap();
            let smaller = non_characteristic_check(&field, &curve, 33, th * shrink).unwrap();
            prop_assert!(!rep.passed || smaller.passed);
            prop_assert_eq!(rep.min_angle, smaller.min_angle);
        }

        #[test]
        fn values_are_transported_exactly(u0 in -5.0f64..5.0, x0 in 0.1f64..2.0, y0 in -2.0f64..2.0) {
            let c = integrate_characteristic(&example2_field(), &[x0, y0], u0, 0.5, 1e-2).unwrap();
            prop_assert!(c.values.iter().all(|&u| u == u0));
        }
    }
}

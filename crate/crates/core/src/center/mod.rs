//! Center-manifold reduction: the center/stable split of the linear part,
//! the reduced system on `ker A`, the Ito energy rate behind dissipativity
//! estimates, and Monte Carlo comparison of long-time statistics.

mod compare;
mod reduce;
mod spectral;

pub use compare::{
    collect_marginals, compare_long_time, compare_marginals, ks_two_sample, EnsembleSpec, LongTimeComparison,
    LongTimeConfig, Marginals, Moments, SideSummary, MIN_ENSEMBLE, SAMPLE_TIMES,
};
pub use reduce::{build_reduced_system, lyapunov_rate, ReducedSystem};
pub use spectral::{spectral_split, SpectralSplit, SplitSummary, DEFAULT_TOL_EIG};

#[cfg(test)]
mod tests {
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    use super::*;
    use crate::error::Error;
    use crate::fields::{Polynomial, PolynomialMatrixField, PolynomialVectorField, VectorField};
    use crate::registry;
    use crate::sde::{Calculus, SdeSystem};

    fn diag(d: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(d))
    }

    #[test]
    fn split_of_the_example_linear_part() {
        let s = spectral_split(&diag(&[-1.0, 0.0]), DEFAULT_TOL_EIG).unwrap();
        assert_eq!(s.k(), 1);
        assert_eq!(s.center_basis().as_slice(), &[0.0, 1.0]);
        assert_eq!(s.stable_basis().as_slice(), &[1.0, 0.0]);
        assert_eq!(s.center_projection().as_slice(), &[0.0, 1.0]);
    }

    #[test]
    fn unstable_and_imaginary_spectra_are_rejected() {
        assert!(matches!(
            spectral_split(&diag(&[1.0, 0.0]), DEFAULT_TOL_EIG),
            Err(Error::UnstableSpectrum { .. })
        ));
        let rot = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert!(matches!(
            spectral_split(&rot, DEFAULT_TOL_EIG),
            Err(Error::ImaginaryCenter { .. })
        ));
        let jordan = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(
            spectral_split(&jordan, DEFAULT_TOL_EIG),
            Err(Error::DefectiveZero {
                algebraic: 2,
                geometric: 1
            })
        ));
        assert!(spectral_split(&diag(&[-1.0, 0.0]), 0.0).is_err());
    }

    #[test]
    fn two_dimensional_center() {
        let s = spectral_split(&diag(&[-2.0, 0.0, 0.0]), DEFAULT_TOL_EIG).unwrap();
        assert_eq!(s.k(), 2);
        assert_eq!(
            s.center_basis(),
            &DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0])
        );
    }

    #[test]
    fn oblique_split() {
        // eigenvector (1, 1) for -1 and kernel (0, 1): not orthogonal
        let a = DMatrix::<f64>::from_row_slice(2, 2, &[-1.0, 0.0, -1.0, 0.0]);
        let s = spectral_split(&a, DEFAULT_TOL_EIG).unwrap();
        assert_eq!(s.k(), 1);
        let pe = s.center_projection() * s.center_basis();
        assert!((pe[(0, 0)] - 1.0).abs() <= 1e-12);
        // P_c kills the stable direction
        let ps = s.center_projection() * s.stable_basis();
        assert!(ps[(0, 0)].abs() <= 1e-12);
        assert!((a * s.center_basis()).amax() <= 1e-12);
    }

    proptest! {
        #[test]
        fn projection_is_idempotent(d in proptest::collection::vec(-5.0f64..-0.1, 1..4), zeros in 1usize..3, seed in 0u64..1000) {
            let n = d.len() + zeros;
            let mut entries = d.clone();
            entries.extend(std::iter::repeat_n(0.0, zeros));
            // conjugate by a fixed, well-conditioned change of basis
            let q = DMatrix::from_fn(n, n, |i, j| if i == j { 2.0 } else { ((i * 7 + j * 3 + seed as usize) % 5) as f64 * 0.1 });
            let a = &q * diag(&entries) * q.clone().try_inverse().unwrap();
            let s = spectral_split(&a, 1e-8).unwrap();
            prop_assert_eq!(s.k(), zeros);
            let pe = s.center_projection() * s.center_basis();
            prop_assert!((pe - DMatrix::identity(zeros, zeros)).amax() <= 1e-12);
            let ep = s.center_basis() * s.center_projection();
            prop_assert!((&ep * &ep - &ep).amax() <= 1e-10);
        }
    }

    #[test]
    fn reduction_of_the_ito_example() {
        let entry = registry::system::<f64>("example1-ito").unwrap();
        let a = entry.linear.clone().unwrap();
        let split = spectral_split(&a, DEFAULT_TOL_EIG).unwrap();
        let red = build_reduced_system(&entry.system, &a, &split).unwrap();
        let inner = red.inner();
        assert_eq!((inner.dim(), inner.noise_dim()), (1, 1));
        assert_eq!(inner.calculus(), Calculus::Ito);
        let expected_drift = Polynomial::from_pairs(1, &[(-2.0, &[0]), (-1.0, &[3])]).unwrap();
        assert_eq!(inner.drift().as_polynomial().unwrap().component(0), &expected_drift);
        let expected_b = Polynomial::from_pairs(1, &[(1.0, &[1])]).unwrap();
        assert_eq!(inner.diffusion().as_polynomial().unwrap().entry(0, 0), &expected_b);
        assert_eq!(inner.drift().eval(&[1.0]).unwrap(), vec![-3.0]);
        assert_eq!(red.describe(), vec!["dy = (-2 - y^3) dt + y dW".to_string()]);
        // matches the registry's reduced system
        let reg = registry::system::<f64>("example1-reduced").unwrap().system;
        assert_eq!(reg.drift().as_polynomial(), inner.drift().as_polynomial());
    }

    #[test]
    fn reduced_drift_is_the_projected_full_drift() {
        let entry = registry::system::<f64>("example1-strat").unwrap();
        let a = entry.linear.clone().unwrap();
        let split = spectral_split(&a, DEFAULT_TOL_EIG).unwrap();
        let red = build_reduced_system(&entry.system, &a, &split).unwrap();
        assert_eq!(red.inner().calculus(), Calculus::Stratonovich);
        for xi in [-1.5, -0.2, 0.0, 0.8, 2.0] {
            let full = entry.system.drift().eval(&red.embed(&[xi])).unwrap();
            let got = red.inner().drift().eval(&[xi]).unwrap()[0];
            assert!((got - split.project(&full)[0]).abs() < 1e-14);
        }
        // Stratonovich form keeps the -y/2 correction
        assert!((red.inner().drift().eval(&[1.0]).unwrap()[0] + 3.5).abs() < 1e-14);
    }

    #[test]
    fn truncated_reduction_matches_registry() {
        let entry = registry::system::<f64>("example1-truncated").unwrap();
        let a = entry.linear.clone().unwrap();
        let split = spectral_split(&a, DEFAULT_TOL_EIG).unwrap();
        let red = build_reduced_system(&entry.system, &a, &split).unwrap();
        let reg = registry::system::<f64>("example1-reduced-truncated").unwrap().system;
        for xi in [-1.2, -0.7, -0.3, 0.0, 0.4, 0.6, 0.85, 1.5] {
            let got = red.inner().drift().eval(&[xi]).unwrap()[0];
            let want = reg.drift().eval(&[xi]).unwrap()[0];
            assert!((got - want).abs() < 1e-14, "{xi}: {got} vs {want}");
        }
    }

    #[test]
    fn zero_coefficients_reduce_to_zero() {
        let sys = SdeSystem::polynomial(
            PolynomialVectorField::linear(&diag(&[-1.0, 0.0])).unwrap(),
            PolynomialMatrixField::zero(2, 2),
            Calculus::Ito,
        )
        .unwrap();
        let split = spectral_split(&diag(&[-1.0, 0.0]), DEFAULT_TOL_EIG).unwrap();
        let red = build_reduced_system(&sys, &diag(&[-1.0, 0.0]), &split).unwrap();
        assert!(red.inner().drift().as_polynomial().unwrap().component(0).is_zero());
        assert_eq!(red.describe(), vec!["dy = 0 dt".to_string()]);
    }

    #[test]
    fn mismatched_split_is_rejected() {
        let entry = registry::system::<f64>("example1-ito").unwrap();
        let split = spectral_split(&diag(&[-2.0, 0.0]), DEFAULT_TOL_EIG).unwrap();
        assert!(matches!(
            build_reduced_system(&entry.system, &diag(&[-1.0, 0.0]), &split),
            Err(Error::SplitMismatch(_))
        ));
        let split3 = spectral_split(&diag(&[-2.0, 0.0, 0.0]), DEFAULT_TOL_EIG).unwrap();
        assert!(matches!(
            build_reduced_system(&entry.system, &diag(&[-2.0, 0.0, 0.0]), &split3),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    fn paper_rate(x: f64, y: f64) -> f64 {
        -0.5 * (x * x + y * y) - (x * x - y * y).powi(2) + (y - 1.0).powi(2) - 1.0
    }

    #[test]
    fn energy_rate_identity() {
        let sys = registry::system::<f64>("example1-ito").unwrap().system;
        assert_eq!(lyapunov_rate(&sys, &[1.0, 1.0]).unwrap(), -2.0);
        assert!((lyapunov_rate(&sys, &[0.0, 0.5]).unwrap() + 0.9375).abs() < 1e-15);
        for i in 0..100 {
            for j in 0..100 {
                let (x, y) = (-1.0 + 2.0 * i as f64 / 99.0, -1.0 + 2.0 * j as f64 / 99.0);
                let r = lyapunov_rate(&sys, &[x, y]).unwrap();
                assert!((r - paper_rate(x, y)).abs() <= 1e-12);
                let expanded =
                    -x * x + x * x * y * y - x.powi(4) - 2.0 * y + x * x * y * y - y.powi(4) + 0.5 * (x * x + y * y);
                assert!((expanded - paper_rate(x, y)).abs() <= 1e-12);
                if y > 0.0 && y < 1.0 {
                    assert!(r <= -0.5 * (x * x + y * y));
                }
            }
        }
    }

    #[test]
    fn energy_rate_scalar_and_calculus() {
        let sys = SdeSystem::polynomial(
            PolynomialVectorField::new(vec![Polynomial::from_pairs(1, &[(-1.0, &[1])]).unwrap()]).unwrap(),
            PolynomialMatrixField::zero(1, 1),
            Calculus::Ito,
        )
        .unwrap();
        assert_eq!(lyapunov_rate(&sys, &[2.0]).unwrap(), -4.0);
        let strat = registry::system::<f64>("example1-strat").unwrap().system;
        assert!(matches!(
            lyapunov_rate(&strat, &[0.0, 0.0]),
            Err(Error::CalculusMismatch { .. })
        ));
    }

    #[test]
    fn ks_statistic() {
        assert_eq!(ks_two_sample(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), 0.0);
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[3.0, 4.0]), 1.0);
        assert!((ks_two_sample(&[1.0, 2.0, 3.0, 4.0], &[2.5, 3.5]) - 0.5).abs() < 1e-15);
        // ties across samples
        assert_eq!(ks_two_sample(&[0.0, 0.0, 1.0], &[0.0, 1.0, 1.0]), 1.0 / 3.0);
    }

    #[test]
    fn long_time_config_validation() {
        let ok = LongTimeConfig {
            horizon: 2.0,
            burn_in: 1.0,
            h: 0.01,
            ensemble: 100,
        };
        let idx = ok.sample_indices().unwrap();
        assert_eq!(idx.len(), 10);
        assert_eq!((idx[0], idx[9]), (110, 200));
        assert!(matches!(
            LongTimeConfig { ensemble: 99, ..ok }.sample_indices(),
            Err(Error::EnsembleTooSmall { got: 99, min: 100 })
        ));
        assert!(LongTimeConfig { burn_in: 2.0, ..ok }.sample_indices().is_err());
    }

    #[test]
    fn self_comparison_is_close_and_wrong_sign_is_far() {
        let red = registry::system::<f64>("example1-reduced-truncated").unwrap().system;
        let bad = registry::system::<f64>("example1-reduced-corrupted").unwrap().system;
        let cfg = LongTimeConfig {
            horizon: 4.0,
            burn_in: 2.0,
            h: 1e-2,
            ensemble: 400,
        };
        let side = |sys, seed| {
            collect_marginals(
                &EnsembleSpec {
                    system: sys,
                    x0: &[0.0],
                    projection: None,
                    seed,
                    stream_offset: 0,
                },
                &cfg,
            )
            .unwrap()
        };
        let a = side(&red, 1);
        let b = side(&red, 2);
        let c = side(&bad, 3);
        let same = compare_marginals(&a, &b, &cfg).unwrap();
        let diff = compare_marginals(&a, &c, &cfg).unwrap();
        assert!(same.ks_distance < 0.1, "{}", same.ks_distance);
        assert!(diff.ks_distance > 0.3, "{}", diff.ks_distance);
        assert_eq!(same.n_full, 4000);
    }

    #[test]
    fn comparison_is_thread_independent() {
        let entry = registry::system::<f64>("example1-truncated").unwrap();
        let a = entry.linear.clone().unwrap();
        let split = spectral_split(&a, DEFAULT_TOL_EIG).unwrap();
        let red = build_reduced_system(&entry.system, &a, &split).unwrap();
        let cfg = LongTimeConfig {
            horizon: 1.0,
            burn_in: 0.5,
            h: 1e-2,
            ensemble: 100,
        };
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| compare_long_time(&entry.system, &split, &red, &[0.1, 0.2], &cfg, 5).unwrap())
        };
        assert_eq!(run(1), run(3));
    }
}

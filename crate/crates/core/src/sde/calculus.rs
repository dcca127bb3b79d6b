use super::system::{Calculus, Drift, SdeSystem};
use crate::error::{Error, Result};
use crate::fields::{MatrixField, PolynomialMatrixField, PolynomialVectorField};
use crate::scalar::Scalar;

/// `1/2 sum_j [D B^j] B^j` as a polynomial field.
pub fn correction_field<T: Scalar>(diffusion: &PolynomialMatrixField<T>) -> PolynomialVectorField<T> {
    let n = diffusion.dim();
    let mut total = PolynomialVectorField::zero(n);
    for column in diffusion.columns() {
        let jac = column.jacobian_polynomials();
        let product = PolynomialVectorField::new(
            (0..n)
                .map(|i| {
                    (0..n).fold(crate::fields::Polynomial::zero(n), |acc, k| {
                        if jac[i][k].is_zero() || column.component(k).is_zero() {
                            acc
                        } else {
                            &acc + &(&jac[i][k] * column.component(k))
                        }
                    })
                })
                .collect(),
        )
        .expect("square by construction");
        total = total.add(&product).expect("same dimension");
    }
    total.scale(T::lit(0.5))
}

fn polynomial_diffusion<T: Scalar>(sys: &SdeSystem<T>) -> Result<&PolynomialMatrixField<T>> {
    sys.diffusion()
        .as_polynomial()
        .ok_or_else(|| Error::NonPolynomial("diffusion has no analytic Jacobian".into()))
}

/// The Ito-Stratonovich drift correction `1/2 sum_j [D B^j(x)] B^j(x)`,
/// evaluated with exact Jacobians.
pub fn drift_correction<T: Scalar>(sys: &SdeSystem<T>, x: &[T]) -> Result<Vec<T>> {
    let b = polynomial_diffusion(sys)?;
    if x.len() != sys.dim() {
        return Err(Error::DimensionMismatch {
            context: "drift correction",
            expected: sys.dim(),
            got: x.len(),
        });
    }
    let n = sys.dim();
    let mut out = vec![T::zero(); n];
    for column in b.columns() {
        let jac = column.jacobian_exact(x)?;
        let bj: Vec<T> = column.components().iter().map(|c| c.eval(x)).collect();
        for i in 0..n {
            out[i] = out[i] + (0..n).fold(T::zero(), |acc, k| acc + jac[(i, k)] * bj[k]);
        }
    }
    let half = T::lit(0.5);
    Ok(out.into_iter().map(|v| v * half).collect())
}

/// Rewrites `sys` in the `target` calculus. Stratonovich to Ito adds the
/// correction to the drift, Ito to Stratonovich subtracts it; the diffusion is
/// unchanged.
pub fn convert_calculus<T: Scalar>(sys: &SdeSystem<T>, target: Calculus) -> Result<SdeSystem<T>> {
    if sys.calculus() == target {
        return Ok(sys.clone());
    }
    let correction = correction_field(polynomial_diffusion(sys)?);
    let shift = |p: &PolynomialVectorField<T>| match target {
        Calculus::Ito => p.add(&correction),
        Calculus::Stratonovich => p.sub(&correction),
    };
    let drift = match sys.drift() {
        Drift::Polynomial(p) => Drift::Polynomial(shift(p)?),
        Drift::Tapered { exact, tapered } => Drift::Tapered {
            exact: shift(exact)?,
            tapered: tapered.clone(),
        },
        Drift::Custom(_) => {
            return Err(Error::NonPolynomial("drift has no polynomial form".into()));
        }
    };
    debug_assert_eq!(sys.diffusion().dim(), sys.dim());
    Ok(sys.with_parts(drift, target))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Polynomial;

    fn p(pairs: &[(f64, &[u32])]) -> Polynomial<f64> {
        Polynomial::from_pairs(2, pairs).unwrap()
    }

    fn diag_xy() -> PolynomialMatrixField<f64> {
        PolynomialMatrixField::diagonal(vec![p(&[(1.0, &[1, 0])]), p(&[(1.0, &[0, 1])])]).unwrap()
    }

    fn example2_diffusion() -> PolynomialMatrixField<f64> {
        let col = PolynomialVectorField::new(vec![p(&[(1.0, &[1, 0])]), p(&[(1.0, &[1, 0]), (1.0, &[0, 1])])]).unwrap();
        PolynomialMatrixField::from_columns(&[col.clone(), col]).unwrap()
    }

    fn system(diffusion: PolynomialMatrixField<f64>, c: Calculus) -> SdeSystem<f64> {
        SdeSystem::polynomial(PolynomialVectorField::zero(2), diffusion, c).unwrap()
    }

    #[test]
    fn constant_diffusion_has_no_correction() {
        let b =
            PolynomialMatrixField::constant(&nalgebra::DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0])).unwrap();
        let sys = system(b, Calculus::Ito);
        assert_eq!(drift_correction(&sys, &[0.3, -1.0]).unwrap(), vec![0.0, 0.0]);
        let conv = convert_calculus(&sys, Calculus::Stratonovich).unwrap();
        assert_eq!(conv.drift().as_polynomial(), sys.drift().as_polynomial());
    }

    #[test]
    fn diagonal_xy_correction_is_half_identity() {
        let sys = system(diag_xy(), Calculus::Ito);
        for x in [[1.0, 2.0], [-0.5, 3.25]] {
            assert_eq!(drift_correction(&sys, &x).unwrap(), vec![0.5 * x[0], 0.5 * x[1]]);
        }
        let field = correction_field(&diag_xy());
        assert_eq!(
            field,
            PolynomialVectorField::new(vec![p(&[(0.5, &[1, 0])]), p(&[(0.5, &[0, 1])])]).unwrap()
        );
    }

    #[test]
    fn example2_correction() {
        let sys = system(example2_diffusion(), Calculus::Ito);
        for x in [[1.0, 0.0], [2.0, -3.0], [0.7, 0.1]] {
            let c = drift_correction(&sys, &x).unwrap();
            assert!((c[0] - x[0]).abs() < 1e-15);
            assert!((c[1] - (2.0 * x[0] + x[1])).abs() < 1e-15);
        }
    }

    #[test]
    fn identity_and_round_trip() {
        let drift = PolynomialVectorField::new(vec![
            p(&[(1.0, &[1, 2]), (-1.0, &[3, 0])]),
            p(&[(-2.0, &[0, 0]), (1.0, &[2, 1]), (-1.0, &[0, 3])]),
        ])
        .unwrap();
        let sys = SdeSystem::polynomial(drift, example2_diffusion(), Calculus::Ito).unwrap();
        let same = convert_calculus(&sys, Calculus::Ito).unwrap();
        assert_eq!(same.drift().as_polynomial(), sys.drift().as_polynomial());
        let there = convert_calculus(&sys, Calculus::Stratonovich).unwrap();
        assert_eq!(there.calculus(), Calculus::Stratonovich);
        let back = convert_calculus(&there, Calculus::Ito).unwrap();
        assert_eq!(back.drift().as_polynomial(), sys.drift().as_polynomial());
    }
}

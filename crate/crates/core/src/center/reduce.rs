use std::sync::Arc;

use nalgebra::DMatrix;

use super::spectral::SpectralSplit;
use crate::error::{Error, Result};
use crate::fields::{default_names, FnMatrixField, FnVectorField, MatrixField, PolynomialVectorField, VectorField};
use crate::scalar::{dot, Scalar};
use crate::sde::{Calculus, Diffusion, Drift, SdeSystem};

/// A system on the center subspace together with the split that embeds it.
#[derive(Debug, Clone)]
pub struct ReducedSystem<T> {
    inner: SdeSystem<T>,
    split: SpectralSplit<T>,
}

impl<T: Scalar> ReducedSystem<T> {
    pub fn inner(&self) -> &SdeSystem<T> {
        &self.inner
    }

    pub fn split(&self) -> &SpectralSplit<T> {
        &self.split
    }

    /// Lift to the full space with zero stable coordinates.
    pub fn embed(&self, xi: &[T]) -> Vec<T> {
        self.split.lift(xi)
    }

    /// Names of the reduced coordinates: a center direction that is a
    /// coordinate axis keeps that coordinate's name.
    pub fn coordinate_names(&self, full: &[String]) -> Vec<String> {
        let e = self.split.center_basis();
        (0..e.ncols())
            .map(|j| {
                let col = e.column(j);
                let nonzero: Vec<usize> = (0..col.len()).filter(|&i| col[i] != T::zero()).collect();
                match nonzero.as_slice() {
                    [i] if col[*i] == T::one() => full[*i].clone(),
                    _ => format!("xi{}", j + 1),
                }
            })
            .collect()
    }

    /// Equation lines in the reduced coordinates.
    pub fn describe(&self) -> Vec<String> {
        let full = default_names(self.split.dim());
        self.inner.describe_with(&self.coordinate_names(&full))
    }
}

/// Reduces `sys`, whose drift is `A x + F(x)` with `A = split.a()`, to the
/// center subspace: drift `P_c F(E_c xi)`, diffusion `P_c B(E_c xi) E_c`.
/// `linear` is the `A` the system was assembled with; it must match the split.
pub fn build_reduced_system<T: Scalar>(
    sys: &SdeSystem<T>,
    linear: &DMatrix<T>,
    split: &SpectralSplit<T>,
) -> Result<ReducedSystem<T>> {
    let n = sys.dim();
    if split.dim() != n || linear.nrows() != n || linear.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "system vs spectral split",
            expected: split.dim(),
            got: n,
        });
    }
    if linear != split.a() {
        return Err(Error::SplitMismatch(
            "the system's linear part differs from the split matrix".into(),
        ));
    }
    if sys.noise_dim() != n {
        return Err(Error::SplitMismatch(format!(
            "restricting the noise to the center needs one Wiener process per coordinate (m = n = {n}), got m = {}",
            sys.noise_dim()
        )));
    }
    let k = split.k();
    if k == 0 {
        return Err(Error::SplitMismatch("the linear part has no center directions".into()));
    }
    let e = split.center_basis().clone();
    let p = split.center_projection().clone();
    let e64 = e.map(|v| v.as_f64());
    let orthonormal = (e64.transpose() * &e64 - DMatrix::identity(k, k)).amax() <= 1e-12;

    let lin = PolynomialVectorField::linear(linear)?;
    let drift = match sys.drift() {
        Drift::Polynomial(f) => Drift::Polynomial(f.sub(&lin)?.restrict_linear(&p, &e)?),
        Drift::Tapered { exact, tapered } if orthonormal => Drift::Tapered {
            exact: exact.sub(&lin)?.restrict_linear(&p, &e)?,
            tapered: tapered.with_base(tapered.base().restrict_linear(&p, &e)?),
        },
        other => {
            let other = other.clone();
            let (e, p, a) = (e.clone(), p.clone(), linear.clone());
            Drift::Custom(Arc::new(FnVectorField::new(k, move |xi: &[T], out: &mut [T]| {
                let x: Vec<T> = (0..n)
                    .map(|i| (0..k).fold(T::zero(), |acc, j| acc + e[(i, j)] * xi[j]))
                    .collect();
                let mut f = vec![T::zero(); n];
                other.eval_into(&x, &mut f);
                for (i, fi) in f.iter_mut().enumerate() {
                    *fi = *fi - (0..n).fold(T::zero(), |acc, j| acc + a[(i, j)] * x[j]);
                }
                for (r, o) in out.iter_mut().enumerate() {
                    *o = (0..n).fold(T::zero(), |acc, i| acc + p[(r, i)] * f[i]);
                }
            })))
        }
    };
    let diffusion = match sys.diffusion() {
        Diffusion::Polynomial(b) => Diffusion::Polynomial(b.restrict_linear(&p, &e, &e)?),
        Diffusion::Custom(b) => {
            let b = Arc::clone(b);
            let (e, p) = (e.clone(), p.clone());
            Diffusion::Custom(Arc::new(FnMatrixField::new(k, k, move |xi: &[T], out: &mut [T]| {
                let x: Vec<T> = (0..n)
                    .map(|i| (0..k).fold(T::zero(), |acc, j| acc + e[(i, j)] * xi[j]))
                    .collect();
                let mut full = vec![T::zero(); n * n];
                b.eval_into(&x, &mut full);
                for r in 0..k {
                    for c in 0..k {
                        out[r * k + c] = (0..n).fold(T::zero(), |acc, i| {
                            acc + p[(r, i)] * (0..n).fold(T::zero(), |bcc, j| bcc + full[i * n + j] * e[(j, c)])
                        });
                    }
                }
            })))
        }
    };
    Ok(ReducedSystem {
        inner: SdeSystem::new(drift, diffusion, sys.calculus())?,
        split: split.clone(),
    })
}

/// `<x, F(x)> + 1/2 Tr(B(x) B(x)^T)`: the rate of change of `E |X|^2 / 2`
/// under the Ito generator at `x` (the drift includes the linear part).
pub fn lyapunov_rate<T: Scalar>(sys: &SdeSystem<T>, x: &[T]) -> Result<T> {
    sys.require(Calculus::Ito)?;
    let f = sys.drift().eval(x)?;
    let b = sys.diffusion().eval(x)?;
    let trace = b.iter().fold(T::zero(), |acc, &v| acc + v * v);
    Ok(dot(x, &f) + T::lit(0.5) * trace)
}

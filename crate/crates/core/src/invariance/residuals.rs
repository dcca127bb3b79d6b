use serde::Serialize;

use super::manifold::{AxisBox, GraphManifold};
use super::sampling::sample_manifold_points;
use crate::error::{Error, Result};
use crate::fields::{MatrixField, VectorField};
use crate::scalar::{dot, Scalar};
use crate::sde::{drift_correction, Calculus, SdeSystem};

/// Default threshold on the residual maxima for an "invariant" verdict.
pub const DEFAULT_INVARIANCE_TOL: f64 = 1e-8;

/// `mu(x) = F(x) - 1/2 sum_j [D B^j(x)] B^j(x)` for an Ito system.
pub fn tangency_drift<T: Scalar>(sys: &SdeSystem<T>, x: &[T]) -> Result<Vec<T>> {
    sys.require(Calculus::Ito)?;
    let correction = drift_correction(sys, x)?;
    let f = sys.drift().eval(x)?;
    Ok(f.iter().zip(&correction).map(|(&a, &b)| a - b).collect())
}

/// Residuals of the invariance equations at one point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Residuals<T> {
    /// `mu(x) . grad G(x)`
    pub mu: T,
    /// `B^j(x) . grad G(x)` for every noise column `j`.
    pub columns: Vec<T>,
}

pub fn invariance_residuals<T: Scalar>(
    sys: &SdeSystem<T>,
    manifold: &GraphManifold<T>,
    x: &[T],
) -> Result<Residuals<T>> {
    if manifold.dim() != sys.dim() {
        return Err(Error::DimensionMismatch {
            context: "manifold vs system",
            expected: sys.dim(),
            got: manifold.dim(),
        });
    }
    let grad = manifold.gradient(x)?;
    let mu = tangency_drift(sys, x)?;
    let b = sys.diffusion().eval(x)?;
    let columns = (0..sys.noise_dim())
        .map(|j| (0..sys.dim()).fold(T::zero(), |acc, i| acc + b[(i, j)] * grad[i]))
        .collect();
    Ok(Residuals {
        mu: dot(&mu, &grad),
        columns,
    })
}

/// Which invariance equations decide the verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CheckScope {
    /// Drift equation and every diffusion column.
    #[default]
    All,
    /// Diffusion columns only.
    DiffusionOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Invariant,
    NotInvariant,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointRecord<T> {
    pub x: Vec<T>,
    pub g: T,
    pub mu_res: T,
    pub col_res: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvarianceReport<T> {
    pub verdict: Verdict,
    pub tol: T,
    pub scope: CheckScope,
    pub n_samples: usize,
    pub n_requested: usize,
    /// Fewer points than requested were found.
    pub short: bool,
    pub max_mu_residual: T,
    pub max_column_residuals: Vec<T>,
    pub points: Vec<PointRecord<T>>,
}

/// Samples points of `M` in `bounds` and checks the invariance equations there.
pub fn verify_invariance<T: Scalar>(
    sys: &SdeSystem<T>,
    manifold: &GraphManifold<T>,
    bounds: &AxisBox<T>,
    count: usize,
    seed: u64,
    tol: T,
    scope: CheckScope,
) -> Result<InvarianceReport<T>> {
    if !(tol >= T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be nonnegative, got {tol}"
        )));
    }
    let sample = sample_manifold_points(manifold, bounds, count, seed)?;
    let m = sys.noise_dim();
    let mut max_mu = T::zero();
    let mut max_cols = vec![T::zero(); m];
    let mut points = Vec::with_capacity(sample.points.len());
    for x in sample.points {
        let r = invariance_residuals(sys, manifold, &x)?;
        max_mu = max_mu.max(r.mu.abs());
        for (mx, c) in max_cols.iter_mut().zip(&r.columns) {
            *mx = mx.max(c.abs());
        }
        points.push(PointRecord {
            g: manifold.value(&x)?,
            x,
            mu_res: r.mu,
            col_res: r.columns,
        });
    }
    let columns_ok = max_cols.iter().all(|&c| c <= tol);
    let ok = match scope {
        CheckScope::All => columns_ok && max_mu <= tol,
        CheckScope::DiffusionOnly => columns_ok,
    };
    Ok(InvarianceReport {
        verdict: if ok { Verdict::Invariant } else { Verdict::NotInvariant },
        tol,
        scope,
        n_samples: points.len(),
        n_requested: count,
        short: sample.short,
        max_mu_residual: max_mu,
        max_column_residuals: max_cols,
        points,
    })
}

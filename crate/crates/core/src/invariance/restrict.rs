use std::sync::Arc;

use super::manifold::GraphManifold;
use crate::error::{Error, Result};
use crate::fields::{FnMatrixField, FnVectorField, MatrixField, VectorField};
use crate::scalar::Scalar;
use crate::sde::{Diffusion, Drift, SdeSystem};

const SCAN_CELLS: usize = 64;

/// Lifts chart coordinates to a point of `M` by solving `G = 0` for the one
/// remaining (dependent) coordinate.
#[derive(Debug, Clone)]
pub struct ChartLift<T> {
    manifold: GraphManifold<T>,
    chart: Vec<usize>,
    dependent: usize,
    bracket: (T, T),
}

impl<T: Scalar> ChartLift<T> {
    pub fn new(manifold: GraphManifold<T>, chart: &[usize]) -> Result<Self> {
        let n = manifold.dim();
        if chart.len() + 1 != n {
            return Err(Error::DimensionMismatch {
                context: "chart coordinates (n - 1)",
                expected: n - 1,
                got: chart.len(),
            });
        }
        let mut seen = vec![false; n];
        for &c in chart {
            if c >= n || seen[c] {
                return Err(Error::InvalidParameter(format!(
                    "chart coordinates {chart:?} must be distinct indices below {n}"
                )));
            }
            seen[c] = true;
        }
        let dependent = seen.iter().position(|s| !s).expect("one coordinate left");
        let bracket = manifold.bracket_hint().unwrap_or((
            manifold.domain().lower()[dependent],
            manifold.domain().upper()[dependent],
        ));
        Ok(Self {
            manifold,
            chart: chart.to_vec(),
            dependent,
            bracket,
        })
    }

    pub fn dependent(&self) -> usize {
        self.dependent
    }

    pub fn chart(&self) -> &[usize] {
        &self.chart
    }

    /// Full-space point on `M` above `chart_point`.
    pub fn lift(&self, chart_point: &[T]) -> Result<Vec<T>> {
        if chart_point.len() != self.chart.len() {
            return Err(Error::DimensionMismatch {
                context: "chart point",
                expected: self.chart.len(),
                got: chart_point.len(),
            });
        }
        let mut x = vec![T::zero(); self.manifold.dim()];
        for (&c, &v) in self.chart.iter().zip(chart_point) {
            x[c] = v;
        }
        let d = self.dependent;
        let g_at = |v: T, x: &mut Vec<T>| -> Option<T> {
            x[d] = v;
            self.manifold.value(x).ok()
        };
        // first sign change on a uniform scan of the bracket
        let (lo0, hi0) = self.bracket;
        let cell = (hi0 - lo0) / T::lit(SCAN_CELLS as f64);
        let mut found = None;
        let mut prev: Option<(T, T)> = None;
        for k in 0..=SCAN_CELLS {
            let v = lo0 + cell * T::lit(k as f64);
            let Some(g) = g_at(v, &mut x) else {
                prev = None;
                continue;
            };
            if g == T::zero() {
                found = Some((v, v, g));
                break;
            }
            if let Some((pv, pg)) = prev {
                if pg.signum() != g.signum() {
                    found = Some((pv, v, pg));
                    break;
                }
            }
            prev = Some((v, g));
        }
        let Some((mut lo, mut hi, mut g_lo)) = found else {
            return Err(Error::RootBracket(format!("no root of G above {chart_point:?}")));
        };
        while hi - lo > T::epsilon() * (T::one() + lo.abs().max(hi.abs())) {
            let mid = T::lit(0.5) * (lo + hi);
            let Some(g) = g_at(mid, &mut x) else {
                return Err(Error::RootBracket(format!(
                    "G undefined inside the bracket above {chart_point:?}"
                )));
            };
            if g == T::zero() {
                lo = mid;
                hi = mid;
                break;
            }
            if g.signum() == g_lo.signum() {
                lo = mid;
                g_lo = g;
            } else {
                hi = mid;
            }
        }
        let mut v = T::lit(0.5) * (lo + hi);
        x[d] = v;
        // Newton polish, kept only while it reduces |G|
        for _ in 0..3 {
            let g = self.manifold.value(&x)?;
            if g == T::zero() {
                break;
            }
            let slope = self.manifold.gradient(&x)?[d];
            if slope == T::zero() {
                break;
            }
            let cand = v - g / slope;
            x[d] = cand;
            match self.manifold.value(&x) {
                Ok(gc) if gc.abs() < g.abs() => v = cand,
                _ => {
                    x[d] = v;
                    break;
                }
            }
        }
        Ok(x)
    }
}

/// Restricts `sys` to `M`, viewed as a graph over `chart`: the reduced
/// coefficients are the chart components of `F` and `B` at the lifted point.
/// Off the chart the reduced fields evaluate to NaN, which ends a simulated
/// trajectory there.
pub fn restrict_system<T: Scalar>(
    sys: &SdeSystem<T>,
    manifold: &GraphManifold<T>,
    chart: &[usize],
) -> Result<SdeSystem<T>> {
    if manifold.dim() != sys.dim() {
        return Err(Error::DimensionMismatch {
            context: "manifold vs system",
            expected: sys.dim(),
            got: manifold.dim(),
        });
    }
    let lift = Arc::new(ChartLift::new(manifold.clone(), chart)?);
    let k = chart.len();
    let n = sys.dim();
    let m = sys.noise_dim();

    let drift = sys.drift().clone();
    let drift_lift = Arc::clone(&lift);
    let reduced_drift = FnVectorField::new(k, move |xi: &[T], out: &mut [T]| match drift_lift.lift(xi) {
        Ok(x) => {
            let mut full = vec![T::zero(); n];
            drift.eval_into(&x, &mut full);
            for (o, &c) in out.iter_mut().zip(drift_lift.chart()) {
                *o = full[c];
            }
        }
        Err(_) => out.iter_mut().for_each(|o| *o = T::nan()),
    });

    let diffusion = sys.diffusion().clone();
    let diff_lift = lift;
    let reduced_diffusion = FnMatrixField::new(k, m, move |xi: &[T], out: &mut [T]| match diff_lift.lift(xi) {
        Ok(x) => {
            let mut full = vec![T::zero(); n * m];
            diffusion.eval_into(&x, &mut full);
            for (r, &c) in diff_lift.chart().iter().enumerate() {
                out[r * m..(r + 1) * m].copy_from_slice(&full[c * m..(c + 1) * m]);
            }
        }
        Err(_) => out.iter_mut().for_each(|o| *o = T::nan()),
    });

    SdeSystem::new(
        Drift::Custom(Arc::new(reduced_drift)),
        Diffusion::Custom(Arc::new(reduced_diffusion)),
        sys.calculus(),
    )
}

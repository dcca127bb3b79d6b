use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::manifold::{AxisBox, GraphManifold};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Points closer than this to the zero set (in `|G|`) count as on-manifold.
pub const ON_MANIFOLD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldSample<T> {
    pub points: Vec<Vec<T>>,
    /// Fewer than the requested number of points were found.
    pub short: bool,
}

/// Finds points with `|G| <= 1e-10` by bisecting sign changes of `G` along
/// random segments in `bounds`. Gives up after `100 * count` segments.
pub fn sample_manifold_points<T: Scalar>(
    manifold: &GraphManifold<T>,
    bounds: &AxisBox<T>,
    count: usize,
    seed: u64,
) -> Result<ManifoldSample<T>> {
    if count == 0 {
        return Err(Error::InvalidParameter("sample count must be positive".into()));
    }
    if !manifold.domain().contains_box(bounds) {
        return Err(Error::OutsideDomain(format!(
            "sampling box is not contained in the domain of {}",
            manifold.name()
        )));
    }
    let tol = T::lit(ON_MANIFOLD_TOL).max(T::epsilon() * T::lit(16.0));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_attempts = 100 * count;
    let mut points = Vec::with_capacity(count);
    let mut attempts = 0;
    while points.len() < count && attempts < max_attempts {
        attempts += 1;
        let a = bounds.sample(&mut rng);
        let b = bounds.sample(&mut rng);
        let (Ok(ga), Ok(gb)) = (manifold.value(&a), manifold.value(&b)) else {
            continue;
        };
        if ga.abs() <= tol {
            points.push(a);
            continue;
        }
        if ga.signum() == gb.signum() {
            continue;
        }
        if let Some(p) = bisect_segment(manifold, &a, &b, ga, tol) {
            points.push(p);
        }
    }
    if points.is_empty() {
        return Err(Error::NoSignChange { attempts });
    }
    let short = points.len() < count;
    if short {
        warn!(
            "found only {} of {count} points on {} after {attempts} segments",
            points.len(),
            manifold.name()
        );
    }
    Ok(ManifoldSample { points, short })
}

fn bisect_segment<T: Scalar>(manifold: &GraphManifold<T>, a: &[T], b: &[T], ga: T, tol: T) -> Option<Vec<T>> {
    let point = |lambda: T| -> Vec<T> { a.iter().zip(b).map(|(&p, &q)| p + (q - p) * lambda).collect() };
    let (mut lo, mut hi) = (T::zero(), T::one());
    let mut g_lo = ga;
    for _ in 0..200 {
        let mid = T::lit(0.5) * (lo + hi);
        let x = point(mid);
        let g = manifold.value(&x).ok()?;
        if g.abs() <= tol {
            return Some(x);
        }
        if g.signum() == g_lo.signum() {
            lo = mid;
            g_lo = g;
        } else {
            hi = mid;
        }
        if hi - lo <= T::epsilon() {
            break;
        }
    }
    None
}

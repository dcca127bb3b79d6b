use serde::Serialize;

use super::manifold::GraphManifold;
use super::sampling::ON_MANIFOLD_TOL;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sde::{grid_steps, integrate_path, run_ensemble, BrownianPath, SdeSystem};
use crate::stats;

/// Distribution of `|G(X_t)|` over the surviving trajectories at one time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EscapeQuantiles {
    pub t: f64,
    pub alive: usize,
    pub median: f64,
    pub q90: f64,
    pub mean: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EscapeStats {
    pub ensemble: usize,
    pub h: f64,
    pub horizon: f64,
    /// Trajectories that stopped early (left the domain or blew up).
    pub stopped: usize,
    pub terminal: EscapeQuantiles,
    pub series: Vec<EscapeQuantiles>,
}

/// Maximum number of report times in [`EscapeStats::series`].
const REPORT_POINTS: usize = 100;

/// Simulates an ensemble started on `M` and records how far the discrete
/// trajectories drift off it, measured by `|G|`. Trajectories stop when they
/// leave the manifold's domain.
#[allow(clippy::too_many_arguments)]
pub fn escape_diagnostic<T: Scalar>(
    sys: &SdeSystem<T>,
    manifold: &GraphManifold<T>,
    x0: &[T],
    horizon: T,
    h: T,
    ensemble: usize,
    seed: u64,
) -> Result<EscapeStats> {
    if ensemble == 0 {
        return Err(Error::EnsembleTooSmall { got: 0, min: 1 });
    }
    let g0 = manifold.value(x0)?;
    if g0.abs().as_f64() > ON_MANIFOLD_TOL {
        return Err(Error::NotOnManifold {
            residual: g0.abs().as_f64(),
        });
    }
    let n_steps = grid_steps(horizon, h)?;
    let stride = n_steps.div_ceil(REPORT_POINTS).max(1);
    let report_idx: Vec<usize> = (0..=n_steps).filter(|k| k % stride == 0 || *k == n_steps).collect();
    let inside = |x: &[T]| manifold.value(x).is_ok();

    // per trajectory: |G| at each report index reached
    let runs: Vec<Result<Vec<f64>>> = run_ensemble(ensemble, |i| {
        let path = BrownianPath::sample(sys.noise_dim(), horizon, h, seed, i as u64)?;
        let mut values = Vec::with_capacity(report_idx.len());
        let mut next = 0;
        integrate_path(sys, x0, &path, Some(&inside), |k, x| {
            if next < report_idx.len() && report_idx[next] == k {
                values.push(manifold.value(x).map(|g| g.abs().as_f64()).unwrap_or(f64::NAN));
                next += 1;
            }
        })?;
        Ok(values)
    });
    let runs: Vec<Vec<f64>> = runs.into_iter().collect::<Result<_>>()?;

    let hf = h.as_f64();
    let series: Vec<EscapeQuantiles> = report_idx
        .iter()
        .enumerate()
        .map(|(r, &k)| {
            let vals: Vec<f64> = runs.iter().filter_map(|v| v.get(r).copied()).collect();
            summarize(k as f64 * hf, &vals)
        })
        .collect();
    let terminal = series.last().cloned().expect("at least one report time");
    if terminal.alive == 0 {
        return Err(Error::AllBlownUp);
    }
    Ok(EscapeStats {
        ensemble,
        h: hf,
        horizon: horizon.as_f64(),
        stopped: ensemble - terminal.alive,
        terminal,
        series,
    })
}

fn summarize(t: f64, vals: &[f64]) -> EscapeQuantiles {
    let s = stats::sorted(vals);
    EscapeQuantiles {
        t,
        alive: s.len(),
        median: stats::quantile_sorted(&s, 0.5),
        q90: stats::quantile_sorted(&s, 0.9),
        mean: stats::mean(&s),
        max: s.last().copied().unwrap_or(f64::NAN),
    }
}

use nalgebra::DMatrix;
use serde::Serialize;

use super::reduce::ReducedSystem;
use super::spectral::SpectralSplit;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sde::{grid_steps, integrate_path, run_ensemble, BrownianPath, SdeSystem};
use crate::stats;

/// Minimum ensemble size for a long-time comparison.
pub const MIN_ENSEMBLE: usize = 100;

/// Number of pooled sample times in `(burn_in, horizon]`.
pub const SAMPLE_TIMES: usize = 10;

/// Two-sample Kolmogorov-Smirnov statistic `sup |F_a - F_b|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return f64::NAN;
    }
    let (a, b) = (stats::sorted(a), stats::sorted(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] == v {
            i += 1;
        }
        while j < b.len() && b[j] == v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LongTimeConfig {
    pub horizon: f64,
    pub burn_in: f64,
    pub h: f64,
    pub ensemble: usize,
}

impl LongTimeConfig {
    /// Grid indices of the sample times `burn_in + i (horizon - burn_in) / 10`.
    pub fn sample_indices(&self) -> Result<Vec<usize>> {
        if !(self.burn_in >= 0.0 && self.burn_in < self.horizon) {
            return Err(Error::InvalidParameter(format!(
                "burn-in {} must lie in [0, horizon = {})",
                self.burn_in, self.horizon
            )));
        }
        if self.ensemble < MIN_ENSEMBLE {
            return Err(Error::EnsembleTooSmall {
                got: self.ensemble,
                min: MIN_ENSEMBLE,
            });
        }
        let n = grid_steps(self.horizon, self.h)?;
        let mut idx: Vec<usize> = (1..=SAMPLE_TIMES)
            .map(|i| {
                let t = self.burn_in + i as f64 * (self.horizon - self.burn_in) / SAMPLE_TIMES as f64;
                ((t / self.h).round() as usize).min(n)
            })
            .collect();
        idx.dedup();
        Ok(idx)
    }
}

/// One side of a comparison: a system, its start, the linear map to the
/// compared coordinates (identity when `None`), and the random streams
/// `stream_offset .. stream_offset + ensemble` of `seed`.
#[derive(Debug, Clone, Copy)]
pub struct EnsembleSpec<'a, T> {
    pub system: &'a SdeSystem<T>,
    pub x0: &'a [T],
    pub projection: Option<&'a DMatrix<T>>,
    pub seed: u64,
    pub stream_offset: u64,
}

/// Pooled samples of the compared coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginals {
    /// One sample vector per coordinate.
    pub samples: Vec<Vec<f64>>,
    /// Trajectories that stopped before the horizon (excluded entirely).
    pub blown_up: usize,
    pub sample_times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Moments {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

impl Marginals {
    pub fn moments(&self) -> Moments {
        Moments {
            mean: self.samples.iter().map(|s| stats::mean(s)).collect(),
            var: self.samples.iter().map(|s| stats::variance(s)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Simulates the ensemble and pools the projected states at the sample times.
pub fn collect_marginals<T: Scalar>(spec: &EnsembleSpec<'_, T>, cfg: &LongTimeConfig) -> Result<Marginals> {
    let idx = cfg.sample_indices()?;
    let sys = spec.system;
    let dim = spec.projection.map_or(sys.dim(), |p| p.nrows());
    if let Some(p) = spec.projection {
        if p.ncols() != sys.dim() {
            return Err(Error::DimensionMismatch {
                context: "comparison projection",
                expected: sys.dim(),
                got: p.ncols(),
            });
        }
    }
    let (horizon, h) = (T::lit(cfg.horizon), T::lit(cfg.h));
    let runs: Vec<Result<Option<Vec<f64>>>> = run_ensemble(cfg.ensemble, |i| {
        let path = BrownianPath::sample(sys.noise_dim(), horizon, h, spec.seed, spec.stream_offset + i as u64)?;
        let mut out = Vec::with_capacity(idx.len() * dim);
        let mut next = 0;
        let stopped = integrate_path(sys, spec.x0, &path, None, |k, x| {
            if next < idx.len() && idx[next] == k {
                match spec.projection {
                    Some(p) => out.extend(
                        (0..dim).map(|r| (0..x.len()).map(|c| p[(r, c)].as_f64() * x[c].as_f64()).sum::<f64>()),
                    ),
                    None => out.extend(x.iter().map(|v| v.as_f64())),
                }
                next += 1;
            }
        })?;
        Ok(if stopped.is_some() { None } else { Some(out) })
    });
    let mut samples = vec![Vec::with_capacity(cfg.ensemble * idx.len()); dim];
    let mut blown_up = 0;
    for run in runs {
        match run? {
            Some(v) => {
                for chunk in v.chunks(dim) {
                    for (s, &c) in samples.iter_mut().zip(chunk) {
                        s.push(c);
                    }
                }
            }
            None => blown_up += 1,
        }
    }
    if blown_up == cfg.ensemble {
        return Err(Error::AllBlownUp);
    }
    Ok(Marginals {
        samples,
        blown_up,
        sample_times: idx.iter().map(|&k| k as f64 * cfg.h).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SideSummary {
    pub samples: usize,
    pub blown_up: usize,
    pub moments: Moments,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LongTimeComparison {
    /// Largest KS distance over the compared coordinates.
    pub ks_distance: f64,
    pub ks_per_coordinate: Vec<f64>,
    pub n_full: usize,
    pub n_reduced: usize,
    pub full: SideSummary,
    pub reduced: SideSummary,
    pub sample_times: Vec<f64>,
    pub config: LongTimeConfig,
}

/// KS distances between two sets of pooled marginals, coordinate by coordinate.
pub fn compare_marginals(a: &Marginals, b: &Marginals, cfg: &LongTimeConfig) -> Result<LongTimeComparison> {
    if a.samples.len() != b.samples.len() {
        return Err(Error::DimensionMismatch {
            context: "compared coordinates",
            expected: a.samples.len(),
            got: b.samples.len(),
        });
    }
    let ks: Vec<f64> = a
        .samples
        .iter()
        .zip(&b.samples)
        .map(|(x, y)| ks_two_sample(x, y))
        .collect();
    let side = |m: &Marginals| SideSummary {
        samples: m.len(),
        blown_up: m.blown_up,
        moments: m.moments(),
    };
    Ok(LongTimeComparison {
        ks_distance: ks.iter().copied().fold(0.0, f64::max),
        ks_per_coordinate: ks,
        n_full: a.len(),
        n_reduced: b.len(),
        full: side(a),
        reduced: side(b),
        sample_times: a.sample_times.clone(),
        config: *cfg,
    })
}

/// Compares the center-coordinate marginals of the full system (started at
/// `x0`, projected by `P_c`) with those of the reduced system (started at
/// `P_c x0`). The full ensemble uses streams `0..E` of `seed`, the reduced one
/// streams `E..2E`, so the two samples are independent.
pub fn compare_long_time<T: Scalar>(
    full: &SdeSystem<T>,
    split: &SpectralSplit<T>,
    reduced: &ReducedSystem<T>,
    x0: &[T],
    cfg: &LongTimeConfig,
    seed: u64,
) -> Result<LongTimeComparison> {
    if x0.len() != full.dim() {
        return Err(Error::DimensionMismatch {
            context: "initial state",
            expected: full.dim(),
            got: x0.len(),
        });
    }
    let xi0 = split.project(x0);
    let a = collect_marginals(
        &EnsembleSpec {
            system: full,
            x0,
            projection: Some(split.center_projection()),
            seed,
            stream_offset: 0,
        },
        cfg,
    )?;
    let b = collect_marginals(
        &EnsembleSpec {
            system: reduced.inner(),
            x0: &xi0,
            projection: None,
            seed,
            stream_offset: cfg.ensemble as u64,
        },
        cfg,
    )?;
    compare_marginals(&a, &b, cfg)
}

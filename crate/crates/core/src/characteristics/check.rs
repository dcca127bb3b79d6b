use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::field::{CharacteristicField, InitialCurve};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default lower bound on the angle between `(a, c)` and the initial data.
pub const DEFAULT_ANGLE_THRESHOLD: f64 = 1e-3;

/// Step of the central differences that give the tangents of the initial data.
pub const TANGENT_STEP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonCharacteristicReport {
    pub passed: bool,
    /// Smallest angle (radians) between `V = (a, c)` and the span of the
    /// tangents `(df/ds_i, dh/ds_i)`, over all samples.
    pub min_angle: f64,
    /// Parameter value where the minimum occurs.
    pub at: Vec<f64>,
    pub threshold: f64,
    pub samples: usize,
}

/// Samples per parameter axis so that the tensor grid has about `total` points.
pub(crate) fn per_axis(total: usize, p: usize) -> usize {
    let mut k = 2usize;
    while k.pow(p as u32) < total {
        k += 1;
    }
    k
}

/// Uniform tensor grid over the parameter box, `count` nodes per axis,
/// enumerated row-major (last axis fastest).
pub(crate) fn parameter_grid<T: Scalar>(curve: &InitialCurve<T>, count: usize) -> Vec<Vec<T>> {
    let p = curve.param_dim();
    let (lo, hi) = (curve.params().lower(), curve.params().upper());
    let total = count.pow(p as u32);
    (0..total)
        .map(|mut flat| {
            let mut s = vec![T::zero(); p];
            for a in (0..p).rev() {
                let i = flat % count;
                flat /= count;
                s[a] = axis_node(lo[a], hi[a], count, i);
            }
            s
        })
        .collect()
}

pub(crate) fn axis_node<T: Scalar>(lo: T, hi: T, count: usize, i: usize) -> T {
    if i + 1 == count {
        hi
    } else {
        lo + (hi - lo) * T::lit(i as f64) / T::lit((count - 1) as f64)
    }
}

/// Angle between `v` and the column span of `tangents` (each of length `n + 1`).
fn angle_to_span(v: &[f64], tangents: &[Vec<f64>], at: &[f64]) -> Result<f64> {
    let rows = v.len();
    let tm = DMatrix::from_fn(rows, tangents.len(), |i, j| tangents[j][i]);
    let gram = tm.transpose() * &tm;
    let scale = gram.diagonal().max();
    if !(scale > 0.0) {
        return Err(Error::DegenerateTangent(at.to_vec()));
    }
    let svd = gram.clone().svd(false, false);
    if svd.singular_values.min() <= 1e-12 * scale {
        return Err(Error::DegenerateTangent(at.to_vec()));
    }
    let vv = DVector::from_column_slice(v);
    let coef = gram
        .lu()
        .solve(&(tm.transpose() * &vv))
        .ok_or_else(|| Error::DegenerateTangent(at.to_vec()))?;
    let along = &tm * coef;
    let across = &vv - &along;
    Ok(across.norm().atan2(along.norm()))
}

/// Checks that the initial data is nowhere tangent to the characteristic
/// direction. Angles are measured in `R^{n+1}`, so the value component takes
/// part. `samples` is the approximate number of parameter samples.
pub fn non_characteristic_check<T: Scalar>(
    field: &CharacteristicField<T>,
    curve: &InitialCurve<T>,
    samples: usize,
    threshold: f64,
) -> Result<NonCharacteristicReport> {
    if field.dim() != curve.dim() {
        return Err(Error::DimensionMismatch {
            context: "initial data vs characteristic field",
            expected: field.dim(),
            got: curve.dim(),
        });
    }
    if !(threshold >= 0.0) {
        return Err(Error::InvalidParameter("angle threshold must be non-negative".into()));
    }
    let n = field.dim();
    let p = curve.param_dim();
    let grid = parameter_grid(curve, per_axis(samples.max(2), p));
    let step = T::lit(TANGENT_STEP);
    let mut z = vec![T::zero(); n + 1];
    let mut min_angle = f64::INFINITY;
    let mut at = Vec::new();
    for s in &grid {
        let s64: Vec<f64> = s.iter().map(|v| v.as_f64()).collect();
        let x = curve.position(s);
        let mut rhs_in = x.clone();
        rhs_in.push(curve.value(s));
        field.rhs(&rhs_in, &mut z);
        let v: Vec<f64> = z.iter().map(|c| c.as_f64()).collect();
        if v.iter().all(|c| *c == 0.0) {
            return Err(Error::ZeroFieldVector(s64));
        }
        let tangents: Vec<Vec<f64>> = (0..p)
            .map(|a| {
                let mut sp = s.clone();
                let mut sm = s.clone();
                sp[a] = sp[a] + step;
                sm[a] = sm[a] - step;
                let (fp, fm) = (curve.position(&sp), curve.position(&sm));
                let mut t: Vec<f64> = fp
                    .iter()
                    .zip(&fm)
                    .map(|(&a, &b)| ((a - b) / (step + step)).as_f64())
                    .collect();
                t.push(((curve.value(&sp) - curve.value(&sm)) / (step + step)).as_f64());
                t
            })
            .collect();
        let angle = angle_to_span(&v, &tangents, &s64)?;
        if angle < min_angle {
            min_angle = angle;
            at = s64;
        }
    }
    Ok(NonCharacteristicReport {
        passed: min_angle >= threshold,
        min_angle,
        at,
        threshold,
        samples: grid.len(),
    })
}

use std::io::Write;

use log::warn;
use nalgebra::{DMatrix, DVector};

use super::check::{axis_node, non_characteristic_check, parameter_grid, DEFAULT_ANGLE_THRESHOLD};
use super::field::{march, CharacteristicField, InitialCurve};
use crate::error::{Error, Result};
use crate::invariance::AxisBox;
use crate::scalar::Scalar;
use crate::sde::{grid_steps, run_ensemble};

const MAX_NEWTON: usize = 50;
const INVERSION_TOL: f64 = 1e-8;
const COARSE_NODES: usize = 8192;

/// Sampling of the integral surface: `s_count` nodes per parameter axis and a
/// time grid of step `h` over `[t_start, t_end]`, with `t_start <= 0 <= t_end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceGrid<T> {
    pub s_count: usize,
    pub t_start: T,
    pub t_end: T,
    pub h: T,
}

impl<T: Scalar> SurfaceGrid<T> {
    pub fn new(s_count: usize, t_end: T, h: T) -> Self {
        Self {
            s_count,
            t_start: T::zero(),
            t_end,
            h,
        }
    }

    /// Also integrates the characteristics backwards to `t_start < 0`.
    pub fn with_t_start(mut self, t_start: T) -> Self {
        self.t_start = t_start;
        self
    }

    fn steps(&self) -> Result<(usize, usize)> {
        if self.s_count < 4 {
            return Err(Error::InvalidParameter(format!(
                "s_count must be at least 4 for cubic interpolation, got {}",
                self.s_count
            )));
        }
        if self.t_start > T::zero() || self.t_end < T::zero() {
            return Err(Error::InvalidParameter(format!(
                "time range [{}, {}] must contain 0",
                self.t_start, self.t_end
            )));
        }
        let back = if self.t_start < T::zero() {
            grid_steps(-self.t_start, self.h)?
        } else {
            0
        };
        let fwd = if self.t_end > T::zero() {
            grid_steps(self.t_end, self.h)?
        } else {
            0
        };
        if back + fwd < 3 {
            return Err(Error::InvalidParameter("time grid needs at least 4 nodes".into()));
        }
        Ok((back, fwd))
    }
}

/// Characteristics sampled on an `(s, t)` grid: `x(s, t)` and `u(s, t)`.
///
/// Each s-node owns a contiguous range of valid time indices; a characteristic
/// that blows up is cut off where its state stopped being finite.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralSurface<T> {
    dim: usize,
    params: AxisBox<T>,
    s_count: usize,
    t_grid: Vec<T>,
    t_zero: usize,
    h: T,
    points: Vec<T>,
    values: Vec<T>,
    valid: Vec<(usize, usize)>,
    truncated: Vec<usize>,
    bounds: AxisBox<f64>,
    coarse: Vec<(usize, usize)>,
}

/// Where a point sits on the surface.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceLocation {
    pub params: Vec<f64>,
    pub t: f64,
    pub value: f64,
    /// `||x(s, t) - x||` at the returned parameters.
    pub residual: f64,
    pub iterations: usize,
}

impl<T: Scalar> IntegralSurface<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn param_dim(&self) -> usize {
        self.dim - 1
    }

    pub fn params(&self) -> &AxisBox<T> {
        &self.params
    }

    pub fn s_count(&self) -> usize {
        self.s_count
    }

    /// Number of s-nodes (`s_count^(n-1)`).
    pub fn node_count(&self) -> usize {
        self.valid.len()
    }

    pub fn t_grid(&self) -> &[T] {
        &self.t_grid
    }

    /// Index of `t = 0` in the time grid.
    pub fn t_zero(&self) -> usize {
        self.t_zero
    }

    pub fn step(&self) -> T {
        self.h
    }

    /// Parameter value of s-node `node` (row-major, last axis fastest).
    pub fn s_node(&self, node: usize) -> Vec<T> {
        let p = self.param_dim();
        let mut s = vec![T::zero(); p];
        let mut flat = node;
        for a in (0..p).rev() {
            s[a] = axis_node(
                self.params.lower()[a],
                self.params.upper()[a],
                self.s_count,
                flat % self.s_count,
            );
            flat /= self.s_count;
        }
        s
    }

    pub fn point(&self, node: usize, k: usize) -> &[T] {
        let at = (node * self.t_grid.len() + k) * self.dim;
        &self.points[at..at + self.dim]
    }

    pub fn value(&self, node: usize, k: usize) -> T {
        self.values[node * self.t_grid.len() + k]
    }

    /// Inclusive range of valid time indices for an s-node.
    pub fn valid_range(&self, node: usize) -> (usize, usize) {
        self.valid[node]
    }

    /// s-nodes whose characteristic blew up before the end of the time grid.
    pub fn truncated(&self) -> &[usize] {
        &self.truncated
    }

    /// Bounding box of all valid surface points.
    pub fn footprint(&self) -> &AxisBox<f64> {
        &self.bounds
    }

    fn valid_nodes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.valid
            .iter()
            .enumerate()
            .flat_map(|(node, &(lo, hi))| (lo..=hi).map(move |k| (node, k)))
    }

    /// Minimum and maximum of `u` over the valid samples.
    pub fn value_range(&self) -> (T, T) {
        self.valid_nodes()
            .fold((T::infinity(), T::neg_infinity()), |(lo, hi), (node, k)| {
                let u = self.value(node, k);
                (lo.min(u), hi.max(u))
            })
    }

    /// CSV with columns `s,t,x1,...,xn,u` (`s1,...` when there are several
    /// parameters), one row per valid grid node.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let p = self.param_dim();
        let mut header: Vec<String> = if p == 1 {
            vec!["s".into()]
        } else {
            (1..=p).map(|i| format!("s{i}")).collect()
        };
        header.push("t".into());
        header.extend((1..=self.dim).map(|i| format!("x{i}")));
        header.push("u".into());
        w.write_record(&header)?;
        for node in 0..self.node_count() {
            let s = self.s_node(node);
            let (lo, hi) = self.valid[node];
            for k in lo..=hi {
                let mut row: Vec<String> = s.iter().map(|v| v.to_string()).collect();
                row.push(self.t_grid[k].to_string());
                row.extend(self.point(node, k).iter().map(|v| v.to_string()));
                row.push(self.value(node, k).to_string());
                w.write_record(&row)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    fn distance2(&self, node: usize, k: usize, x: &[f64]) -> f64 {
        self.point(node, k)
            .iter()
            .zip(x)
            .map(|(&a, &b)| (a.as_f64() - b).powi(2))
            .sum()
    }

    fn nearest_brute(&self, x: &[f64]) -> Option<(usize, usize)> {
        let mut best = None;
        let mut best_d = f64::INFINITY;
        for (node, k) in self.valid_nodes() {
            let d = self.distance2(node, k, x);
            if d < best_d {
                best_d = d;
                best = Some((node, k));
            }
        }
        best
    }

    /// Nearest node on a coarse sub-grid, refined by a local descent on the
    /// full grid.
    fn nearest_fast(&self, x: &[f64]) -> Option<(usize, usize)> {
        let (mut node, mut k) = *self
            .coarse
            .iter()
            .min_by(|a, b| self.distance2(a.0, a.1, x).total_cmp(&self.distance2(b.0, b.1, x)))?;
        let p = self.param_dim();
        let mut d = self.distance2(node, k, x);
        loop {
            let mut improved = false;
            for (nb, kb) in self.neighbours(node, k, p) {
                let db = self.distance2(nb, kb, x);
                if db < d {
                    d = db;
                    node = nb;
                    k = kb;
                    improved = true;
                }
            }
            if !improved {
                return Some((node, k));
            }
        }
    }

    fn neighbours(&self, node: usize, k: usize, p: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(2 * p + 2);
        let mut stride = 1;
        for _ in 0..p {
            let i = (node / stride) % self.s_count;
            if i > 0 {
                out.push((node - stride, k));
            }
            if i + 1 < self.s_count {
                out.push((node + stride, k));
            }
            stride *= self.s_count;
        }
        if k > 0 {
            out.push((node, k - 1));
        }
        out.push((node, k + 1));
        out.retain(|&(nb, kb)| {
            let (lo, hi) = self.valid[nb];
            kb >= lo && kb <= hi
        });
        out
    }

    fn axis(&self, a: usize) -> (f64, f64, usize) {
        if a < self.param_dim() {
            let lo = self.params.lower()[a].as_f64();
            let hi = self.params.upper()[a].as_f64();
            (lo, (hi - lo) / (self.s_count - 1) as f64, self.s_count)
        } else {
            (self.t_grid[0].as_f64(), self.h.as_f64(), self.t_grid.len())
        }
    }

    fn theta_of(&self, node: usize, k: usize) -> Vec<f64> {
        let mut th: Vec<f64> = self.s_node(node).iter().map(|v| v.as_f64()).collect();
        th.push(self.t_grid[k].as_f64());
        th
    }

    /// Tensor cubic Lagrange interpolant of `(x, u)` and its derivatives in
    /// `(s, t)`. `None` when the stencil leaves the valid part of the grid.
    pub(crate) fn interpolate(&self, theta: &[f64]) -> Option<Interpolant> {
        let p = self.param_dim();
        let n = self.dim;
        let mut starts = vec![0usize; p + 1];
        let mut weights = vec![[0.0; 4]; p + 1];
        let mut dweights = vec![[0.0; 4]; p + 1];
        for a in 0..p {
            let (o, d, count) = self.axis(a);
            let start = stencil_start((theta[a] - o) / d, 0, count - 1)?;
            starts[a] = start;
            (weights[a], dweights[a]) = lagrange4((theta[a] - o) / d - start as f64, d);
        }
        let nodes = stencil_nodes(&starts[..p], self.s_count);
        let (vlo, vhi) = nodes.iter().fold((0, usize::MAX), |(lo, hi), &nd| {
            let (a, b) = self.valid[nd];
            (lo.max(a), hi.min(b))
        });
        if vhi < vlo + 3 {
            return None;
        }
        let (o, d, _) = self.axis(p);
        let start = stencil_start((theta[p] - o) / d, vlo, vhi)?;
        starts[p] = start;
        (weights[p], dweights[p]) = lagrange4((theta[p] - o) / d - start as f64, d);

        let mut x = vec![0.0; n];
        let mut u = 0.0;
        let mut jac = DMatrix::zeros(n, p + 1);
        for (si, &nd) in nodes.iter().enumerate() {
            // digits of si in base 4 give the per-axis stencil offsets
            let mut digits = vec![0usize; p];
            let mut rem = si;
            for a in (0..p).rev() {
                digits[a] = rem % 4;
                rem /= 4;
            }
            let ws: f64 = (0..p).map(|a| weights[a][digits[a]]).product();
            for j in 0..4 {
                let k = start + j;
                let w = ws * weights[p][j];
                let pt = self.point(nd, k);
                let val = self.value(nd, k).as_f64();
                for i in 0..n {
                    x[i] += w * pt[i].as_f64();
                }
                u += w * val;
                for b in 0..=p {
                    let mut dw = if b == p { dweights[p][j] } else { weights[p][j] };
                    for a in 0..p {
                        dw *= if a == b {
                            dweights[a][digits[a]]
                        } else {
                            weights[a][digits[a]]
                        };
                    }
                    for i in 0..n {
                        jac[(i, b)] += dw * pt[i].as_f64();
                    }
                }
            }
        }
        Some(Interpolant { x, u, jac })
    }

    fn clamp_theta(&self, theta: &mut [f64]) -> bool {
        let mut clamped = false;
        for (a, th) in theta.iter_mut().enumerate() {
            let (o, d, count) = self.axis(a);
            let hi = o + d * (count - 1) as f64;
            if *th < o {
                *th = o;
                clamped = true;
            } else if *th > hi {
                *th = hi;
                clamped = true;
            }
        }
        clamped
    }

    fn newton(&self, x: &[f64], seed: (usize, usize)) -> Result<SurfaceLocation> {
        let mut theta = self.theta_of(seed.0, seed.1);
        let outside = || Error::OutsideFootprint(x.to_vec());
        let mut clamped = false;
        for it in 0..=MAX_NEWTON {
            let Some(ip) = self.interpolate(&theta) else {
                return Err(outside());
            };
            let diff = DVector::from_iterator(x.len(), ip.x.iter().zip(x).map(|(a, b)| a - b));
            let r = diff.norm();
            if r <= INVERSION_TOL {
                return Ok(self.polish(x, theta, ip, r, it));
            }
            if it == MAX_NEWTON {
                break;
            }
            let Some(delta) = ip.jac.clone().lu().solve(&diff) else {
                break;
            };
            for (t, dl) in theta.iter_mut().zip(delta.iter()) {
                *t -= dl;
            }
            clamped = self.clamp_theta(&mut theta);
        }
        if clamped {
            Err(outside())
        } else {
            Err(Error::NewtonFailed { iterations: MAX_NEWTON })
        }
    }

    /// A few extra Newton steps below the tolerance, kept while they help.
    fn polish(&self, x: &[f64], mut theta: Vec<f64>, mut ip: Interpolant, mut r: f64, it: usize) -> SurfaceLocation {
        for _ in 0..3 {
            let diff = DVector::from_iterator(x.len(), ip.x.iter().zip(x).map(|(a, b)| a - b));
            let Some(delta) = ip.jac.clone().lu().solve(&diff) else {
                break;
            };
            let mut cand = theta.clone();
            for (t, dl) in cand.iter_mut().zip(delta.iter()) {
                *t -= dl;
            }
            self.clamp_theta(&mut cand);
            let Some(next) = self.interpolate(&cand) else {
                break;
            };
            let rn = next.x.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            if rn >= r {
                break;
            }
            theta = cand;
            ip = next;
            r = rn;
        }
        let p = self.param_dim();
        SurfaceLocation {
            params: theta[..p].to_vec(),
            t: theta[p],
            value: ip.u,
            residual: r,
            iterations: it,
        }
    }

    /// Solves `x(s, t) = x` for `(s, t)`.
    pub fn locate(&self, x: &[T]) -> Result<SurfaceLocation> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                context: "surface query",
                expected: self.dim,
                got: x.len(),
            });
        }
        let xf: Vec<f64> = x.iter().map(|v| v.as_f64()).collect();
        if !xf.iter().all(|v| v.is_finite()) || !self.bounds.contains(&xf) {
            return Err(Error::OutsideFootprint(xf));
        }
        let seed = self
            .nearest_fast(&xf)
            .ok_or_else(|| Error::OutsideFootprint(xf.clone()))?;
        match self.newton(&xf, seed) {
            Ok(loc) => Ok(loc),
            Err(first) => match self.nearest_brute(&xf) {
                Some(exact) if exact != seed => self.newton(&xf, exact),
                _ => Err(first),
            },
        }
    }
}

pub(crate) struct Interpolant {
    pub x: Vec<f64>,
    pub u: f64,
    /// `dx/d(s, t)`, `n x n`.
    pub jac: DMatrix<f64>,
}

/// First index of a 4-point stencil around grid coordinate `r`, inside `[lo, hi]`.
fn stencil_start(r: f64, lo: usize, hi: usize) -> Option<usize> {
    if !r.is_finite() || hi < lo + 3 {
        return None;
    }
    let cell = r.floor() - 1.0;
    let start = cell.clamp(lo as f64, (hi - 3) as f64);
    Some(start as usize)
}

/// Cubic Lagrange weights on nodes 0..3 at local coordinate `r`, and their
/// derivatives with respect to the physical coordinate (node spacing `d`).
fn lagrange4(r: f64, d: f64) -> ([f64; 4], [f64; 4]) {
    let mut w = [0.0; 4];
    let mut dw = [0.0; 4];
    for k in 0..4 {
        let denom: f64 = (0..4).filter(|&j| j != k).map(|j| k as f64 - j as f64).product();
        w[k] = (0..4).filter(|&j| j != k).map(|j| r - j as f64).product::<f64>() / denom;
        dw[k] = (0..4)
            .filter(|&m| m != k)
            .map(|m| {
                (0..4)
                    .filter(|&j| j != k && j != m)
                    .map(|j| r - j as f64)
                    .product::<f64>()
            })
            .sum::<f64>()
            / (denom * d);
    }
    (w, dw)
}

/// Flat s-node indices of the tensor stencil starting at `starts`, in the
/// base-4 digit order used by [`IntegralSurface::interpolate`].
fn stencil_nodes(starts: &[usize], count: usize) -> Vec<usize> {
    let p = starts.len();
    (0..4usize.pow(p as u32))
        .map(|mut si| {
            let mut digits = vec![0usize; p];
            for a in (0..p).rev() {
                digits[a] = si % 4;
                si /= 4;
            }
            digits
                .iter()
                .zip(starts)
                .fold(0, |acc, (&dg, &st)| acc * count + st + dg)
        })
        .collect()
}

/// Integrates one characteristic per s-grid node, forwards to `t_end` and
/// backwards to `t_start`. Requires the non-characteristic check to pass on
/// the s-grid with the default angle threshold.
pub fn build_integral_surface<T: Scalar>(
    field: &CharacteristicField<T>,
    curve: &InitialCurve<T>,
    grid: &SurfaceGrid<T>,
) -> Result<IntegralSurface<T>> {
    let (back, fwd) = grid.steps()?;
    let report = non_characteristic_check(
        field,
        curve,
        grid.s_count.pow(curve.param_dim() as u32),
        DEFAULT_ANGLE_THRESHOLD,
    )?;
    if !report.passed {
        return Err(Error::Characteristic {
            angle: report.min_angle,
            threshold: report.threshold,
            at: report.at,
        });
    }
    let n = field.dim();
    let nt = back + fwd + 1;
    let h = grid.h;
    let t_grid: Vec<T> = (0..nt).map(|k| T::lit(k as f64 - back as f64) * h).collect();
    let s_nodes = parameter_grid(curve, grid.s_count);

    struct Column<T> {
        points: Vec<T>,
        values: Vec<T>,
        valid: (usize, usize),
        truncated: bool,
    }
    let columns: Vec<Column<T>> = run_ensemble(s_nodes.len(), |i| {
        let s = &s_nodes[i];
        let mut z0 = curve.position(s);
        z0.push(curve.value(s));
        let mut points = vec![T::nan(); nt * n];
        let mut values = vec![T::nan(); nt];
        let mut put = |k: usize, z: &[T]| {
            points[k * n..(k + 1) * n].copy_from_slice(&z[..n]);
            values[k] = z[n];
        };
        put(back, &z0);
        let mut lo = back;
        let mut hi = back;
        let b = march(field, &z0, -h, back, |j, z| {
            put(back - j, z);
            lo = back - j;
        });
        let f = march(field, &z0, h, fwd, |j, z| {
            put(back + j, z);
            hi = back + j;
        });
        Column {
            points,
            values,
            valid: (lo, hi),
            truncated: b.is_some() || f.is_some(),
        }
    });

    let mut points = Vec::with_capacity(columns.len() * nt * n);
    let mut values = Vec::with_capacity(columns.len() * nt);
    let mut valid = Vec::with_capacity(columns.len());
    let mut truncated = Vec::new();
    for (i, c) in columns.into_iter().enumerate() {
        points.extend(c.points);
        values.extend(c.values);
        valid.push(c.valid);
        if c.truncated {
            truncated.push(i);
        }
    }
    if !truncated.is_empty() {
        warn!("{} characteristics blew up and were cut off", truncated.len());
    }

    let mut lower = vec![f64::INFINITY; n];
    let mut upper = vec![f64::NEG_INFINITY; n];
    for (node, &(lo, hi)) in valid.iter().enumerate() {
        for k in lo..=hi {
            for i in 0..n {
                let v = points[(node * nt + k) * n + i].as_f64();
                lower[i] = lower[i].min(v);
                upper[i] = upper[i].max(v);
            }
        }
    }
    let bounds: Vec<(f64, f64)> = lower
        .iter()
        .zip(&upper)
        .map(|(&lo, &hi)| {
            let pad = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
            (lo - pad, hi + pad)
        })
        .collect();
    let bounds = AxisBox::new(&bounds)?;

    let total: usize = valid.iter().map(|&(lo, hi)| hi - lo + 1).sum();
    let stride = ((total as f64 / COARSE_NODES as f64).powf(1.0 / n as f64).ceil() as usize).max(1);
    let p = curve.param_dim();
    let coarse: Vec<(usize, usize)> = valid
        .iter()
        .enumerate()
        .filter(|(node, _)| {
            let mut flat = *node;
            (0..p).all(|_| {
                let keep = (flat % grid.s_count).is_multiple_of(stride);
                flat /= grid.s_count;
                keep
            })
        })
        .flat_map(|(node, &(lo, hi))| (lo..=hi).filter(move |k| k % stride == 0).map(move |k| (node, k)))
        .collect();

    Ok(IntegralSurface {
        dim: n,
        params: curve.params().clone(),
        s_count: grid.s_count,
        t_grid,
        t_zero: back,
        h,
        points,
        values,
        valid,
        truncated,
        bounds,
        coarse,
    })
}

/// Value of the surface solution `u` at `x`: the nearest grid node seeds a
/// Newton inversion of `(s, t) -> x(s, t)` on the cubic interpolant.
pub fn evaluate_surface<T: Scalar>(surface: &IntegralSurface<T>, x: &[T]) -> Result<T> {
    Ok(T::lit(surface.locate(x)?.value))
}

/// `min(u) * max(u) <= 0` over the surface samples: the solution takes the
/// value zero somewhere.
pub fn zero_level_check<T: Scalar>(surface: &IntegralSurface<T>) -> bool {
    let (lo, hi) = surface.value_range();
    lo * hi <= T::zero()
}

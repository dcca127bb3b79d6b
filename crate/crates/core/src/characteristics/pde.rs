use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use super::check::{non_characteristic_check, NonCharacteristicReport, DEFAULT_ANGLE_THRESHOLD};
use super::field::{CharacteristicField, InitialCurve};
use super::surface::{build_integral_surface, zero_level_check, IntegralSurface, SurfaceGrid};
use crate::error::{Error, Result};
use crate::fields::{FnVectorField, MatrixField, ScalarFunction, VectorField};
use crate::invariance::{tangency_drift, AxisBox, GraphManifold};
use crate::scalar::{dot, Scalar};
use crate::sde::{Calculus, SdeSystem};

/// Finite-difference step for gradients of a surface-backed `G`.
pub const SURFACE_GRADIENT_STEP: f64 = 1e-5;

/// A tangency vector of an Ito system: the drift `mu` or a diffusion column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    Mu,
    /// Zero-based column index.
    Column(usize),
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::Mu => f.write_str("mu"),
            Generator::Column(j) => write!(f, "B{}", j + 1),
        }
    }
}

impl std::str::FromStr for Generator {
    type Err = Error;

    /// Accepts `mu` or `B1`, `B2`, ... (one-based).
    fn from_str(s: &str) -> Result<Self> {
        if s == "mu" {
            return Ok(Generator::Mu);
        }
        s.strip_prefix('B')
            .and_then(|j| j.parse::<usize>().ok())
            .filter(|&j| j >= 1)
            .map(|j| Generator::Column(j - 1))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown generator {s:?}; use mu, B1, B2, ...")))
    }
}

/// All tangency vectors of `sys`: `mu` first, then the columns.
pub fn generators(noise_dim: usize) -> Vec<Generator> {
    std::iter::once(Generator::Mu)
        .chain((0..noise_dim).map(Generator::Column))
        .collect()
}

/// The tangency vector as a vector field. Points where it cannot be
/// evaluated map to NaN.
pub fn generator_field<T: Scalar>(sys: &SdeSystem<T>, generator: Generator) -> Result<Arc<dyn VectorField<T>>> {
    sys.require(Calculus::Ito)?;
    let n = sys.dim();
    let m = sys.noise_dim();
    let sys = sys.clone();
    Ok(match generator {
        Generator::Mu => Arc::new(FnVectorField::new(
            n,
            move |x: &[T], out: &mut [T]| match tangency_drift(&sys, x) {
                Ok(mu) => out.copy_from_slice(&mu),
                Err(_) => out.iter_mut().for_each(|o| *o = T::nan()),
            },
        )),
        Generator::Column(j) => {
            if j >= m {
                return Err(Error::InvalidParameter(format!(
                    "generator B{} requested but the noise dimension is {m}",
                    j + 1
                )));
            }
            Arc::new(FnVectorField::new(n, move |x: &[T], out: &mut [T]| {
                let mut b = vec![T::zero(); n * m];
                sys.diffusion().eval_into(x, &mut b);
                for (i, o) in out.iter_mut().enumerate() {
                    *o = b[i * m + j];
                }
            }))
        }
    })
}

/// Surface-backed `G`: the interpolated solution `u`, with a central
/// finite-difference gradient.
#[derive(Debug, Clone)]
pub struct SurfaceFunction<T> {
    surface: Arc<IntegralSurface<T>>,
}

impl<T: Scalar> SurfaceFunction<T> {
    pub fn new(surface: Arc<IntegralSurface<T>>) -> Self {
        Self { surface }
    }

    pub fn surface(&self) -> &Arc<IntegralSurface<T>> {
        &self.surface
    }
}

impl<T: Scalar> ScalarFunction<T> for SurfaceFunction<T> {
    fn dim(&self) -> usize {
        self.surface.dim()
    }

    fn value(&self, x: &[T]) -> Result<T> {
        Ok(T::lit(self.surface.locate(x)?.value))
    }

    fn gradient(&self, x: &[T]) -> Result<Vec<T>> {
        let h = SURFACE_GRADIENT_STEP;
        let xf: Vec<f64> = x.iter().map(|v| v.as_f64()).collect();
        (0..x.len())
            .map(|i| {
                let mut xp = xf.clone();
                let mut xm = xf.clone();
                xp[i] += h;
                xm[i] -= h;
                let to_t = |v: &[f64]| v.iter().map(|&c| T::lit(c)).collect::<Vec<T>>();
                let up = self.surface.locate(&to_t(&xp))?.value;
                let um = self.surface.locate(&to_t(&xm))?.value;
                Ok(T::lit((up - um) / (2.0 * h)))
            })
            .collect()
    }
}

/// Largest tangency residual `|V . grad G|` of one generator over the
/// sampled zero-level points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneratorResidual {
    pub generator: String,
    /// This generator drove the characteristics.
    pub driver: bool,
    pub max_abs: f64,
    pub mean_abs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub generator: String,
    pub non_characteristic: NonCharacteristicReport,
    pub zero_level: bool,
    /// s-nodes whose characteristics blew up.
    pub truncated: Vec<usize>,
    /// Zero-level points used for the residuals.
    pub points: Vec<Vec<f64>>,
    /// Points where the surface gradient could not be formed.
    pub skipped: usize,
    pub residuals: Vec<GeneratorResidual>,
}

#[derive(Debug, Clone)]
pub struct PdeSetup<T> {
    pub grid: SurfaceGrid<T>,
    pub angle_threshold: f64,
    /// Parameter samples for the non-characteristic check.
    pub check_samples: usize,
    /// Zero-level points in the consistency report.
    pub report_points: usize,
}

impl<T: Scalar> PdeSetup<T> {
    pub fn new(grid: SurfaceGrid<T>) -> Self {
        Self {
            grid,
            angle_threshold: DEFAULT_ANGLE_THRESHOLD,
            check_samples: 101,
            report_points: 200,
        }
    }
}

#[derive(Debug, Clone)]
pub struct InvariancePdeSolution<T> {
    pub manifold: GraphManifold<T>,
    pub surface: Arc<IntegralSurface<T>>,
    pub report: ConsistencyReport,
}

/// Points of the zero level of `u`, found by bisecting sign changes along
/// the first parameter axis at each time node. At most `max_points` points,
/// picked evenly.
pub fn zero_level_points<T: Scalar>(surface: &IntegralSurface<T>, max_points: usize) -> Vec<Vec<f64>> {
    let p = surface.param_dim();
    let sc = surface.s_count();
    let stride: usize = sc.pow(p as u32 - 1);
    let mut found = Vec::new();
    for k in 0..surface.t_grid().len() {
        for node in 0..surface.node_count() {
            if (node / stride) % sc + 1 == sc {
                continue;
            }
            let next = node + stride;
            let ok = |nd: usize| {
                let (lo, hi) = surface.valid_range(nd);
                k >= lo && k <= hi
            };
            if !ok(node) || !ok(next) {
                continue;
            }
            let (u0, u1) = (surface.value(node, k).as_f64(), surface.value(next, k).as_f64());
            let mut theta: Vec<f64> = surface.s_node(node).iter().map(|v| v.as_f64()).collect();
            theta.push(surface.t_grid()[k].as_f64());
            if u0 == 0.0 {
                found.push(theta);
            } else if u0 * u1 < 0.0 {
                let (mut lo, mut hi) = (theta[0], surface.s_node(next)[0].as_f64());
                let mut ulo = u0;
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    theta[0] = mid;
                    let Some(ip) = surface.interpolate(&theta) else { break };
                    if ip.u == 0.0 {
                        lo = mid;
                        hi = mid;
                        break;
                    }
                    if (ip.u < 0.0) == (ulo < 0.0) {
                        lo = mid;
                        ulo = ip.u;
                    } else {
                        hi = mid;
                    }
                    if hi - lo <= f64::EPSILON * (1.0 + lo.abs()) {
                        break;
                    }
                }
                theta[0] = 0.5 * (lo + hi);
                found.push(theta);
            }
        }
        // the last node on the axis has no right neighbour
        for node in (0..surface.node_count()).filter(|nd| (nd / stride) % sc + 1 == sc) {
            let (lo, hi) = surface.valid_range(node);
            if k >= lo && k <= hi && surface.value(node, k).as_f64() == 0.0 {
                let mut theta: Vec<f64> = surface.s_node(node).iter().map(|v| v.as_f64()).collect();
                theta.push(surface.t_grid()[k].as_f64());
                found.push(theta);
            }
        }
    }
    let picked: Vec<Vec<f64>> = if found.len() <= max_points {
        found
    } else {
        (0..max_points)
            .map(|i| found[i * (found.len() - 1) / (max_points - 1).max(1)].clone())
            .collect()
    };
    picked
        .iter()
        .filter_map(|theta| surface.interpolate(theta).map(|ip| ip.x))
        .collect()
}

/// Builds an invariant-manifold candidate `{G = 0}` by solving
/// `V . grad G = 0` along one tangency vector `V` with the method of
/// characteristics, then reports the residuals of every tangency vector
/// against the constructed `grad G` on the zero level.
pub fn solve_invariance_pde<T: Scalar>(
    sys: &SdeSystem<T>,
    generator: Generator,
    curve: &InitialCurve<T>,
    setup: &PdeSetup<T>,
) -> Result<InvariancePdeSolution<T>> {
    if curve.dim() != sys.dim() {
        return Err(Error::DimensionMismatch {
            context: "initial data vs system",
            expected: sys.dim(),
            got: curve.dim(),
        });
    }
    let field = CharacteristicField::homogeneous(generator_field(sys, generator)?);
    let check = non_characteristic_check(&field, curve, setup.check_samples, setup.angle_threshold)?;
    if !check.passed {
        return Err(Error::Characteristic {
            angle: check.min_angle,
            threshold: check.threshold,
            at: check.at,
        });
    }
    let surface = Arc::new(build_integral_surface(&field, curve, &setup.grid)?);
    if !zero_level_check(&surface) {
        return Err(Error::NoZeroLevel);
    }
    let g = SurfaceFunction::new(Arc::clone(&surface));
    let fp = surface.footprint();
    let bounds: Vec<(T, T)> = fp
        .lower()
        .iter()
        .zip(fp.upper())
        .map(|(&lo, &hi)| (T::lit(lo), T::lit(hi)))
        .collect();
    let manifold = GraphManifold::new(
        format!("characteristic surface ({generator})"),
        Arc::new(g.clone()),
        AxisBox::new(&bounds)?,
    )?;

    let points = zero_level_points(&surface, setup.report_points);
    let fields: Vec<(Generator, Arc<dyn VectorField<T>>)> = generators(sys.noise_dim())
        .into_iter()
        .map(|gen| generator_field(sys, gen).map(|f| (gen, f)))
        .collect::<Result<_>>()?;
    let mut sums = vec![(0.0f64, 0.0f64); fields.len()];
    let mut used = 0usize;
    let mut skipped = 0usize;
    for x in &points {
        let xt: Vec<T> = x.iter().map(|&v| T::lit(v)).collect();
        let Ok(grad) = g.gradient(&xt) else {
            skipped += 1;
            continue;
        };
        used += 1;
        for ((_, f), acc) in fields.iter().zip(sums.iter_mut()) {
            let v = f.eval(&xt)?;
            let r = dot(&v, &grad).as_f64().abs();
            acc.0 = acc.0.max(r);
            acc.1 += r;
        }
    }
    let residuals = fields
        .iter()
        .zip(&sums)
        .map(|((gen, _), &(max, sum))| GeneratorResidual {
            generator: gen.to_string(),
            driver: *gen == generator,
            max_abs: max,
            mean_abs: if used > 0 { sum / used as f64 } else { f64::NAN },
        })
        .collect();

    let report = ConsistencyReport {
        generator: generator.to_string(),
        non_characteristic: check,
        zero_level: true,
        truncated: surface.truncated().to_vec(),
        points,
        skipped,
        residuals,
    };
    Ok(InvariancePdeSolution {
        manifold,
        surface,
        report,
    })
}

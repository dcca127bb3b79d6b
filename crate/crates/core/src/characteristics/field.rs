use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fields::{Polynomial, VectorField};
use crate::invariance::AxisBox;
use crate::scalar::{all_finite, Scalar};

type ScalarFn<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;
type PointFn<T> = Arc<dyn Fn(&[T]) -> Vec<T> + Send + Sync>;

/// The linear first-order PDE `sum_i a_i(x) u_{x_i} = c(x)`, carried as the
/// right-hand side of its characteristic system `x' = a(x)`, `u' = c(x)`.
#[derive(Clone)]
pub struct CharacteristicField<T> {
    a: Arc<dyn VectorField<T>>,
    c: ScalarFn<T>,
}

impl<T: Scalar> CharacteristicField<T> {
    pub fn new(a: Arc<dyn VectorField<T>>, c: impl Fn(&[T]) -> T + Send + Sync + 'static) -> Self {
        Self { a, c: Arc::new(c) }
    }

    /// `c = 0`, the case of the invariance equations.
    pub fn homogeneous(a: Arc<dyn VectorField<T>>) -> Self {
        Self::new(a, |_| T::zero())
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn a(&self) -> &Arc<dyn VectorField<T>> {
        &self.a
    }

    pub fn c(&self, x: &[T]) -> T {
        (self.c)(x)
    }

    /// Writes `(a(x), c(x))` into `out` (length `n + 1`).
    pub(crate) fn rhs(&self, z: &[T], out: &mut [T]) {
        let n = self.dim();
        self.a.eval_into(&z[..n], &mut out[..n]);
        out[n] = (self.c)(&z[..n]);
    }
}

impl<T> fmt::Debug for CharacteristicField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CharacteristicField")
    }
}

/// Initial data `x = f(s)`, `u = h(s)` over a parameter box in `R^{n-1}`.
#[derive(Clone)]
pub struct InitialCurve<T> {
    params: AxisBox<T>,
    dim: usize,
    position: PointFn<T>,
    value: ScalarFn<T>,
}

impl<T: Scalar> InitialCurve<T> {
    pub fn new(
        params: AxisBox<T>,
        dim: usize,
        position: impl Fn(&[T]) -> Vec<T> + Send + Sync + 'static,
        value: impl Fn(&[T]) -> T + Send + Sync + 'static,
    ) -> Result<Self> {
        if params.dim() + 1 != dim {
            return Err(Error::DimensionMismatch {
                context: "initial data parameters (n - 1)",
                expected: dim.saturating_sub(1),
                got: params.dim(),
            });
        }
        Ok(Self {
            params,
            dim,
            position: Arc::new(position),
            value: Arc::new(value),
        })
    }

    /// Polynomial position and value maps in the parameters `s`.
    pub fn from_polynomials(params: AxisBox<T>, position: Vec<Polynomial<T>>, value: Polynomial<T>) -> Result<Self> {
        let p = params.dim();
        for (i, f) in position.iter().chain(std::iter::once(&value)).enumerate() {
            if f.dim() != p {
                return Err(Error::InvalidParameter(format!(
                    "initial data map {i} takes {} parameters, expected {p}",
                    f.dim()
                )));
            }
        }
        let dim = position.len();
        Self::new(
            params,
            dim,
            move |s| position.iter().map(|f| f.eval(s)).collect(),
            move |s| value.eval(s),
        )
    }

    pub fn params(&self) -> &AxisBox<T> {
        &self.params
    }

    pub fn param_dim(&self) -> usize {
        self.params.dim()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn position(&self, s: &[T]) -> Vec<T> {
        (self.position)(s)
    }

    pub fn value(&self, s: &[T]) -> T {
        (self.value)(s)
    }
}

impl<T> fmt::Debug for InitialCurve<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "InitialCurve(n = {})", self.dim)
    }
}

/// One characteristic on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicCurve<T> {
    pub times: Vec<T>,
    /// Row-major, one `n`-vector per time.
    pub points: Vec<T>,
    pub values: Vec<T>,
}

impl<T: Scalar> CharacteristicCurve<T> {
    pub fn point(&self, k: usize) -> &[T] {
        let n = self.points.len() / self.times.len();
        &self.points[k * n..(k + 1) * n]
    }
}

pub(crate) struct Rk4<T> {
    k: [Vec<T>; 4],
    tmp: Vec<T>,
}

impl<T: Scalar> Rk4<T> {
    pub(crate) fn new(len: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![T::zero(); len]),
            tmp: vec![T::zero(); len],
        }
    }

    /// Advances `z` by one classical Runge-Kutta step of size `dt`.
    pub(crate) fn step(&mut self, field: &CharacteristicField<T>, z: &mut [T], dt: T) {
        let half = T::lit(0.5) * dt;
        field.rhs(z, &mut self.k[0]);
        for (i, t) in self.tmp.iter_mut().enumerate() {
            *t = z[i] + half * self.k[0][i];
        }
        field.rhs(&self.tmp, &mut self.k[1]);
        for (i, t) in self.tmp.iter_mut().enumerate() {
            *t = z[i] + half * self.k[1][i];
        }
        field.rhs(&self.tmp, &mut self.k[2]);
        for (i, t) in self.tmp.iter_mut().enumerate() {
            *t = z[i] + dt * self.k[2][i];
        }
        field.rhs(&self.tmp, &mut self.k[3]);
        let sixth = dt / T::lit(6.0);
        let two = T::lit(2.0);
        for (i, zi) in z.iter_mut().enumerate() {
            *zi = *zi + sixth * (self.k[0][i] + two * (self.k[1][i] + self.k[2][i]) + self.k[3][i]);
        }
    }
}

/// Runs `steps` RK4 steps of size `dt` from `z0` (length `n + 1`), calling
/// `visit(j, z)` after step `j` (1-based). Returns the first step whose state
/// is not finite, if any; nothing from that step on is visited.
pub(crate) fn march<T: Scalar>(
    field: &CharacteristicField<T>,
    z0: &[T],
    dt: T,
    steps: usize,
    mut visit: impl FnMut(usize, &[T]),
) -> Option<usize> {
    let mut rk = Rk4::new(z0.len());
    let mut z = z0.to_vec();
    for j in 1..=steps {
        rk.step(field, &mut z, dt);
        if !all_finite(&z) {
            return Some(j);
        }
        visit(j, &z);
    }
    None
}

/// Integrates one characteristic from `(x0, u0)` to time `t_end` with fixed
/// RK4 steps of size `h`. A negative `t_end` integrates backwards.
pub fn integrate_characteristic<T: Scalar>(
    field: &CharacteristicField<T>,
    x0: &[T],
    u0: T,
    t_end: T,
    h: T,
) -> Result<CharacteristicCurve<T>> {
    let n = field.dim();
    if x0.len() != n {
        return Err(Error::DimensionMismatch {
            context: "characteristic start",
            expected: n,
            got: x0.len(),
        });
    }
    let steps = crate::sde::grid_steps(t_end.abs(), h)?;
    let dt = if t_end < T::zero() { -h } else { h };
    let mut times = Vec::with_capacity(steps + 1);
    let mut points = Vec::with_capacity((steps + 1) * n);
    let mut values = Vec::with_capacity(steps + 1);
    times.push(T::zero());
    points.extend_from_slice(x0);
    values.push(u0);
    let mut z0 = x0.to_vec();
    z0.push(u0);
    if !all_finite(&z0) {
        return Err(Error::NonFinite { index: 0 });
    }
    let blowup = march(field, &z0, dt, steps, |j, z| {
        times.push(T::lit(j as f64) * dt);
        points.extend_from_slice(&z[..n]);
        values.push(z[n]);
    });
    if let Some(index) = blowup {
        return Err(Error::NonFinite { index });
    }
    Ok(CharacteristicCurve { times, points, values })
}

use std::io::Write;

use serde::Serialize;

use super::brownian::{sample_brownian_path, BrownianPath};
use super::system::{Calculus, SdeSystem};
use crate::error::{Error, Result};
use crate::fields::{MatrixField, VectorField};
use crate::scalar::{all_finite, Scalar};

/// Why a trajectory stopped before the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    NonFinite,
    LeftDomain,
}

/// Index of the last recorded state of a trajectory that stopped early.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lifetime<T> {
    pub index: usize,
    pub time: T,
    pub reason: StopReason,
}

/// States on a uniform time grid; row 0 is the initial condition.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    dim: usize,
    times: Vec<T>,
    states: Vec<T>,
    lifetime: Option<Lifetime<T>>,
}

impl<T: Scalar> Trajectory<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    /// Number of recorded states.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state(&self, k: usize) -> &[T] {
        &self.states[k * self.dim..(k + 1) * self.dim]
    }

    pub fn final_state(&self) -> &[T] {
        self.state(self.len() - 1)
    }

    pub fn lifetime(&self) -> Option<Lifetime<T>> {
        self.lifetime
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.dim).map(|i| format!("x{i}")));
        w.write_record(&header)?;
        for k in 0..self.len() {
            let mut row = vec![self.times[k].to_string()];
            row.extend(self.state(k).iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Scratch buffers shared by the steppers.
pub(crate) struct StepWorkspace<T> {
    f0: Vec<T>,
    f1: Vec<T>,
    b0: Vec<T>,
    b1: Vec<T>,
    predictor: Vec<T>,
}

impl<T: Scalar> StepWorkspace<T> {
    pub(crate) fn new(n: usize, m: usize) -> Self {
        Self {
            f0: vec![T::zero(); n],
            f1: vec![T::zero(); n],
            b0: vec![T::zero(); n * m],
            b1: vec![T::zero(); n * m],
            predictor: vec![T::zero(); n],
        }
    }
}

#[inline]
fn em_into<T: Scalar>(sys: &SdeSystem<T>, x: &[T], dw: &[T], h: T, ws: &mut StepWorkspace<T>, out: &mut [T]) {
    let m = sys.noise_dim();
    sys.drift().eval_into(x, &mut ws.f0);
    sys.diffusion().eval_into(x, &mut ws.b0);
    for i in 0..sys.dim() {
        let noise = (0..m).fold(T::zero(), |acc, j| acc + ws.b0[i * m + j] * dw[j]);
        out[i] = x[i] + ws.f0[i] * h + noise;
    }
}

#[inline]
#[allow(clippy::needless_range_loop)]
fn heun_into<T: Scalar>(sys: &SdeSystem<T>, x: &[T], dw: &[T], h: T, ws: &mut StepWorkspace<T>, out: &mut [T]) {
    let n = sys.dim();
    let m = sys.noise_dim();
    sys.drift().eval_into(x, &mut ws.f0);
    sys.diffusion().eval_into(x, &mut ws.b0);
    for i in 0..n {
        let noise = (0..m).fold(T::zero(), |acc, j| acc + ws.b0[i * m + j] * dw[j]);
        ws.predictor[i] = x[i] + ws.f0[i] * h + noise;
    }
    sys.drift().eval_into(&ws.predictor, &mut ws.f1);
    sys.diffusion().eval_into(&ws.predictor, &mut ws.b1);
    let half = T::lit(0.5);
    for i in 0..n {
        let noise = (0..m).fold(T::zero(), |acc, j| acc + (ws.b0[i * m + j] + ws.b1[i * m + j]) * dw[j]);
        out[i] = x[i] + half * (ws.f0[i] + ws.f1[i]) * h + half * noise;
    }
}

fn check_step_inputs<T: Scalar>(sys: &SdeSystem<T>, x: &[T], dw: &[T], h: T) -> Result<()> {
    if x.len() != sys.dim() {
        return Err(Error::DimensionMismatch {
            context: "state",
            expected: sys.dim(),
            got: x.len(),
        });
    }
    if dw.len() != sys.noise_dim() {
        return Err(Error::DimensionMismatch {
            context: "noise increment",
            expected: sys.noise_dim(),
            got: dw.len(),
        });
    }
    if !(h > T::zero()) {
        return Err(Error::InvalidParameter(format!("step must be positive, got {h}")));
    }
    Ok(())
}

/// `x + F(x) h + B(x) dW` for an Ito system.
pub fn euler_maruyama_step<T: Scalar>(sys: &SdeSystem<T>, x: &[T], dw: &[T], h: T) -> Result<Vec<T>> {
    sys.require(Calculus::Ito)?;
    check_step_inputs(sys, x, dw, h)?;
    let mut ws = StepWorkspace::new(sys.dim(), sys.noise_dim());
    let mut out = vec![T::zero(); sys.dim()];
    em_into(sys, x, dw, h, &mut ws, &mut out);
    Ok(out)
}

/// Heun predictor-corrector for a Stratonovich system: the diffusion is
/// averaged between the current state and the Euler predictor.
pub fn heun_step<T: Scalar>(sys: &SdeSystem<T>, x: &[T], dw: &[T], h: T) -> Result<Vec<T>> {
    sys.require(Calculus::Stratonovich)?;
    check_step_inputs(sys, x, dw, h)?;
    let mut ws = StepWorkspace::new(sys.dim(), sys.noise_dim());
    let mut out = vec![T::zero(); sys.dim()];
    heun_into(sys, x, dw, h, &mut ws, &mut out);
    Ok(out)
}

/// Domain test for a running trajectory; `false` stops it.
pub type Inside<'a, T> = dyn Fn(&[T]) -> bool + Sync + 'a;

/// Drives `sys` along `path` from `x0`, calling `visit(k, state)` for every
/// grid index reached (including 0). Stops early when the state becomes
/// non-finite or `inside` rejects it; the returned lifetime then points at the
/// last accepted index.
pub fn integrate_path<T: Scalar>(
    sys: &SdeSystem<T>,
    x0: &[T],
    path: &BrownianPath<T>,
    inside: Option<&Inside<'_, T>>,
    mut visit: impl FnMut(usize, &[T]),
) -> Result<Option<Lifetime<T>>> {
    if x0.len() != sys.dim() {
        return Err(Error::DimensionMismatch {
            context: "initial condition",
            expected: sys.dim(),
            got: x0.len(),
        });
    }
    if path.noise_dim() != sys.noise_dim() {
        return Err(Error::DimensionMismatch {
            context: "Brownian path noise dimension",
            expected: sys.noise_dim(),
            got: path.noise_dim(),
        });
    }
    let h = path.step();
    let mut ws = StepWorkspace::new(sys.dim(), sys.noise_dim());
    let mut x = x0.to_vec();
    let mut next = vec![T::zero(); sys.dim()];
    visit(0, &x);
    for k in 0..path.n_steps() {
        let dw = path.increment(k);
        match sys.calculus() {
            Calculus::Ito => em_into(sys, &x, dw, h, &mut ws, &mut next),
            Calculus::Stratonovich => heun_into(sys, &x, dw, h, &mut ws, &mut next),
        }
        let reason = if !all_finite(&next) {
            Some(StopReason::NonFinite)
        } else if inside.is_some_and(|f| !f(&next)) {
            Some(StopReason::LeftDomain)
        } else {
            None
        };
        if let Some(reason) = reason {
            return Ok(Some(Lifetime {
                index: k,
                time: T::lit(k as f64) * h,
                reason,
            }));
        }
        std::mem::swap(&mut x, &mut next);
        visit(k + 1, &x);
    }
    Ok(None)
}

pub fn simulate_on_path<T: Scalar>(
    sys: &SdeSystem<T>,
    x0: &[T],
    path: &BrownianPath<T>,
    inside: Option<&Inside<'_, T>>,
) -> Result<Trajectory<T>> {
    if !all_finite(x0) {
        return Err(Error::NonFinite { index: 0 });
    }
    let n = sys.dim();
    let h = path.step();
    let mut times = Vec::with_capacity(path.n_steps() + 1);
    let mut states = Vec::with_capacity((path.n_steps() + 1) * n);
    let lifetime = integrate_path(sys, x0, path, inside, |k, x| {
        times.push(T::lit(k as f64) * h);
        states.extend_from_slice(x);
    })?;
    Ok(Trajectory {
        dim: n,
        times,
        states,
        lifetime,
    })
}

/// Simulates one trajectory with the stepper matching the calculus flag.
pub fn simulate<T: Scalar>(sys: &SdeSystem<T>, x0: &[T], horizon: T, h: T, seed: u64) -> Result<Trajectory<T>> {
    let path = sample_brownian_path(sys.noise_dim(), horizon, h, seed)?;
    simulate_on_path(sys, x0, &path, None)
}

use super::brownian::BrownianPath;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn check<T: Scalar>(samples: &[T], path: &BrownianPath<T>, component: usize) -> Result<()> {
    if samples.len() != path.n_steps() + 1 {
        return Err(Error::DimensionMismatch {
            context: "integrand samples (N + 1 grid values)",
            expected: path.n_steps() + 1,
            got: samples.len(),
        });
    }
    if component >= path.noise_dim() {
        return Err(Error::DimensionMismatch {
            context: "noise component",
            expected: path.noise_dim(),
            got: component + 1,
        });
    }
    Ok(())
}

/// Left-endpoint sum `sum_k f(t_k) dW_k` against noise component `component`.
pub fn ito_integral_component<T: Scalar>(samples: &[T], path: &BrownianPath<T>, component: usize) -> Result<T> {
    check(samples, path, component)?;
    let m = path.noise_dim();
    Ok((0..path.n_steps()).fold(T::zero(), |acc, k| {
        acc + samples[k] * path.increments()[k * m + component]
    }))
}

/// Midpoint sum realized as the endpoint average,
/// `sum_k (f(t_k) + f(t_{k+1}))/2 dW_k`.
pub fn stratonovich_integral_component<T: Scalar>(
    samples: &[T],
    path: &BrownianPath<T>,
    component: usize,
) -> Result<T> {
    check(samples, path, component)?;
    let m = path.noise_dim();
    let half = T::lit(0.5);
    Ok((0..path.n_steps()).fold(T::zero(), |acc, k| {
        acc + half * (samples[k] + samples[k + 1]) * path.increments()[k * m + component]
    }))
}

/// Ito integral against a scalar Brownian path.
pub fn ito_integral<T: Scalar>(samples: &[T], path: &BrownianPath<T>) -> Result<T> {
    scalar_path(path)?;
    ito_integral_component(samples, path, 0)
}

/// Stratonovich integral against a scalar Brownian path.
pub fn stratonovich_integral<T: Scalar>(samples: &[T], path: &BrownianPath<T>) -> Result<T> {
    scalar_path(path)?;
    stratonovich_integral_component(samples, path, 0)
}

fn scalar_path<T: Scalar>(path: &BrownianPath<T>) -> Result<()> {
    if path.noise_dim() != 1 {
        return Err(Error::DimensionMismatch {
            context: "scalar stochastic integral",
            expected: 1,
            got: path.noise_dim(),
        });
    }
    Ok(())
}

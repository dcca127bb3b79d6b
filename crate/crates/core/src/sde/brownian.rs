use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Number of uniform steps of size `h` covering `[0, horizon]`.
pub fn grid_steps<T: Scalar>(horizon: T, h: T) -> Result<usize> {
    let (t, h) = (horizon.as_f64(), h.as_f64());
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!("horizon must be positive, got {t}")));
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidParameter(format!("step must be positive, got {h}")));
    }
    let n = (t / h).round();
    if n < 1.0 || (n * h - t).abs() > 1e-12 * t {
        return Err(Error::InvalidParameter(format!(
            "horizon {t} is not an integer multiple of the step {h}"
        )));
    }
    Ok(n as usize)
}

/// Gaussian increments of an `m`-dimensional Wiener process on a uniform grid.
///
/// The increments are a deterministic function of `(seed, stream)`; ensembles
/// use the trajectory index as the stream so that results do not depend on the
/// order in which trajectories are computed.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPath<T> {
    step: T,
    n_steps: usize,
    noise_dim: usize,
    increments: Vec<T>,
    seed: u64,
    stream: u64,
}

impl<T: Scalar> BrownianPath<T> {
    pub fn sample(noise_dim: usize, horizon: T, h: T, seed: u64, stream: u64) -> Result<Self> {
        if noise_dim == 0 {
            return Err(Error::InvalidParameter("noise dimension must be positive".into()));
        }
        let n_steps = grid_steps(horizon, h)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let sd = h.as_f64().sqrt();
        let increments = (0..n_steps * noise_dim)
            .map(|_| T::lit(sd * rng.sample::<f64, _>(StandardNormal)))
            .collect();
        Ok(Self {
            step: h,
            n_steps,
            noise_dim,
            increments,
            seed,
            stream,
        })
    }

    /// Builds a path from explicit increments (row `k` is `W(t_{k+1}) - W(t_k)`).
    pub fn from_increments(noise_dim: usize, h: T, increments: Vec<T>) -> Result<Self> {
        if noise_dim == 0 || increments.is_empty() || !increments.len().is_multiple_of(noise_dim) {
            return Err(Error::InvalidParameter(
                "increments must form a nonempty N x m matrix".into(),
            ));
        }
        if !(h > T::zero()) {
            return Err(Error::InvalidParameter(format!("step must be positive, got {h}")));
        }
        Ok(Self {
            step: h,
            n_steps: increments.len() / noise_dim,
            noise_dim,
            increments,
            seed: 0,
            stream: 0,
        })
    }

    pub fn step(&self) -> T {
        self.step
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn horizon(&self) -> T {
        T::lit(self.n_steps as f64) * self.step
    }

    pub fn increments(&self) -> &[T] {
        &self.increments
    }

    /// `W(t_{k+1}) - W(t_k)`.
    #[inline]
    pub fn increment(&self, k: usize) -> &[T] {
        &self.increments[k * self.noise_dim..(k + 1) * self.noise_dim]
    }

    /// Values `W_j(t_0), ..., W_j(t_N)`, starting at zero.
    pub fn cumulative(&self, component: usize) -> Vec<T> {
        assert!(component < self.noise_dim);
        let mut w = Vec::with_capacity(self.n_steps + 1);
        let mut acc = T::zero();
        w.push(acc);
        for k in 0..self.n_steps {
            acc = acc + self.increments[k * self.noise_dim + component];
            w.push(acc);
        }
        w
    }

    pub fn terminal(&self) -> Vec<T> {
        (0..self.noise_dim)
            .map(|j| *self.cumulative(j).last().expect("nonempty"))
            .collect()
    }

    /// The same Brownian path observed on a grid `factor` times coarser.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || !self.n_steps.is_multiple_of(factor) {
            return Err(Error::InvalidParameter(format!(
                "cannot coarsen {} steps by a factor of {factor}",
                self.n_steps
            )));
        }
        let n = self.n_steps / factor;
        let m = self.noise_dim;
        let mut increments = vec![T::zero(); n * m];
        for k in 0..n {
            for j in 0..m {
                increments[k * m + j] =
                    (0..factor).fold(T::zero(), |acc, r| acc + self.increments[(k * factor + r) * m + j]);
            }
        }
        Ok(Self {
            step: self.step * T::lit(factor as f64),
            n_steps: n,
            noise_dim: m,
            increments,
            seed: self.seed,
            stream: self.stream,
        })
    }
}

/// Path for the single trajectory driven by `seed` (stream 0).
pub fn sample_brownian_path<T: Scalar>(noise_dim: usize, horizon: T, h: T, seed: u64) -> Result<BrownianPath<T>> {
    BrownianPath::sample(noise_dim, horizon, h, seed, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_increments() {
        let a = sample_brownian_path::<f64>(2, 1.0, 1e-3, 99).unwrap();
        let b = sample_brownian_path::<f64>(2, 1.0, 1e-3, 99).unwrap();
        assert_eq!(a, b);
        let c = BrownianPath::<f64>::sample(2, 1.0, 1e-3, 99, 1).unwrap();
        assert_ne!(a.increments(), c.increments());
    }

    #[test]
    fn increment_variance_is_h() {
        let h = 1e-3;
        let p = sample_brownian_path::<f64>(1, 1.0, h, 2024).unwrap();
        assert_eq!(p.n_steps(), 1000);
        let n = p.n_steps() as f64;
        let mean = p.increments().iter().sum::<f64>() / n;
        let var = p.increments().iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(var >= 0.9 * h && var <= 1.1 * h, "variance {var}");
    }

    #[test]
    fn cumulative_starts_at_zero() {
        let p = sample_brownian_path::<f64>(3, 0.5, 0.01, 1).unwrap();
        for j in 0..3 {
            let w = p.cumulative(j);
            assert_eq!(w[0], 0.0);
            assert_eq!(w.len(), 51);
        }
    }

    #[test]
    fn rejects_non_divisible_horizon() {
        assert!(sample_brownian_path::<f64>(1, 1.0, 0.3, 1).is_err());
        assert!(sample_brownian_path::<f64>(1, 1.0, 0.0, 1).is_err());
        assert!(sample_brownian_path::<f64>(1, -1.0, 0.1, 1).is_err());
        assert!(sample_brownian_path::<f64>(1, 20.0, 1e-3, 1).is_ok());
    }

    #[test]
    fn coarsening_preserves_terminal_value() {
        let p = sample_brownian_path::<f64>(2, 1.0, 2.5e-3, 5).unwrap();
        let q = p.coarsen(4).unwrap();
        assert_eq!(q.n_steps(), 100);
        for (a, b) in p.terminal().iter().zip(q.terminal()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(p.coarsen(3).is_err());
    }
}

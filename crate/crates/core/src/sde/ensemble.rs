use std::io::Write;

use rayon::prelude::*;

use super::brownian::BrownianPath;
use super::stepper::{simulate_on_path, Trajectory};
use super::system::SdeSystem;
use crate::error::Result;
use crate::scalar::Scalar;

/// Evaluates `f(i)` for every trajectory index in parallel. Results come back
/// in index order regardless of scheduling.
pub fn run_ensemble<R, F>(count: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    (0..count).into_par_iter().map(f).collect()
}

/// Trajectory `i` is driven by Brownian stream `i` of `seed`.
pub fn simulate_ensemble<T: Scalar>(
    sys: &SdeSystem<T>,
    x0: &[T],
    horizon: T,
    h: T,
    seed: u64,
    count: usize,
) -> Result<Vec<Trajectory<T>>> {
    run_ensemble(count, |i| {
        let path = BrownianPath::sample(sys.noise_dim(), horizon, h, seed, i as u64)?;
        simulate_on_path(sys, x0, &path, None)
    })
    .into_iter()
    .collect()
}

/// Long-format CSV: `traj_id,t,x1,...,xn`.
pub fn write_ensemble_csv<T: Scalar, W: Write>(trajectories: &[Trajectory<T>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let dim = trajectories.first().map(|t| t.dim()).unwrap_or(0);
    let mut header = vec!["traj_id".to_string(), "t".to_string()];
    header.extend((1..=dim).map(|i| format!("x{i}")));
    w.write_record(&header)?;
    for (id, tr) in trajectories.iter().enumerate() {
        for k in 0..tr.len() {
            let mut row = vec![id.to_string(), tr.times()[k].to_string()];
            row.extend(tr.state(k).iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

//! Brownian paths, Ito and Stratonovich steppers, discrete stochastic
//! integrals and exact conversion between the two calculi.

mod brownian;
mod calculus;
mod ensemble;
mod integral;
mod stepper;
mod system;

pub use brownian::{grid_steps, sample_brownian_path, BrownianPath};
pub use calculus::{convert_calculus, correction_field, drift_correction};
pub use ensemble::{run_ensemble, simulate_ensemble, write_ensemble_csv};
pub use integral::{ito_integral, ito_integral_component, stratonovich_integral, stratonovich_integral_component};
pub use stepper::{
    euler_maruyama_step, heun_step, integrate_path, simulate, simulate_on_path, Inside, Lifetime, StopReason,
    Trajectory,
};
pub use system::{Calculus, Diffusion, Drift, SdeSystem};

//! Simulation of Ito and Stratonovich stochastic differential equations,
//! verification and construction of almost-surely invariant manifolds, and
//! random center-manifold reduction.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below fix the scalar to `f64`, which is what the experiment runner
//! uses.

// `!(a > b)` rejects NaN along with the ordinary failures.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod center;
pub mod characteristics;
mod error;
pub mod fields;
pub mod invariance;
pub mod registry;
mod scalar;
pub mod sde;
mod stats;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Polynomial64 = fields::Polynomial<f64>;
pub type PolynomialVectorField64 = fields::PolynomialVectorField<f64>;
pub type PolynomialMatrixField64 = fields::PolynomialMatrixField<f64>;
pub type TaperedField64 = fields::TaperedField<f64>;
pub type SdeSystem64 = sde::SdeSystem<f64>;
pub type BrownianPath64 = sde::BrownianPath<f64>;
pub type Trajectory64 = sde::Trajectory<f64>;
pub type GraphManifold64 = invariance::GraphManifold<f64>;
pub type InvarianceReport64 = invariance::InvarianceReport<f64>;
pub type IntegralSurface64 = characteristics::IntegralSurface<f64>;
pub type SpectralSplit64 = center::SpectralSplit<f64>;
pub type ReducedSystem64 = center::ReducedSystem<f64>;

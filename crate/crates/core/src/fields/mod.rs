//! Exact polynomial fields with analytic Jacobians, radial truncation, and
//! hand-coded closed forms for the non-polynomial defining functions.

mod closed_form;
mod polynomial;
mod taper;
mod vector;

pub use closed_form::{ClosedForm, ScalarFunction};
pub use polynomial::{default_names, graded_order, Monomial, Polynomial};
pub use taper::{truncate, TaperedField};
pub use vector::{
    jacobian_fd, FnMatrixField, FnVectorField, MatrixField, PolynomialMatrixField, PolynomialVectorField, VectorField,
};

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar used throughout the crate: `f32` or `f64`.
///
/// Monte Carlo sampling and the small eigenvalue problems are carried out in
/// `f64` and converted back, so the trait only asks for what the field
/// algebra and the steppers need.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + serde::Serialize + 'static
{
    /// Converts an `f64` literal. Always succeeds for the supported types.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&u, &v)| acc + u * v)
}

pub(crate) fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

pub(crate) fn all_finite<T: Scalar>(a: &[T]) -> bool {
    a.iter().all(|v| v.is_finite())
}

use super::polynomial::default_names;
use super::vector::{check_dim, PolynomialVectorField, VectorField};
use crate::error::{Error, Result};
use crate::scalar::{norm, Scalar};

/// A polynomial field multiplied by a radial C¹ cutoff: equal to the base
/// inside `inner_radius`, identically zero outside `outer_radius`, with a
/// cubic smoothstep in `||x||` on the annulus between.
#[derive(Debug, Clone, PartialEq)]
pub struct TaperedField<T> {
    base: PolynomialVectorField<T>,
    inner_radius: T,
    outer_radius: T,
}

impl<T: Scalar> TaperedField<T> {
    pub fn new(base: PolynomialVectorField<T>, inner_radius: T, outer_radius: T) -> Result<Self> {
        if !(inner_radius > T::zero()) || !(outer_radius > inner_radius) || !outer_radius.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "taper radii must satisfy 0 < r0 < r1, got r0 = {inner_radius}, r1 = {outer_radius}"
            )));
        }
        Ok(Self {
            base,
            inner_radius,
            outer_radius,
        })
    }

    pub fn base(&self) -> &PolynomialVectorField<T> {
        &self.base
    }

    pub fn inner_radius(&self) -> T {
        self.inner_radius
    }

    pub fn outer_radius(&self) -> T {
        self.outer_radius
    }

    /// Cutoff weight as a function of the radius.
    pub fn weight(&self, r: T) -> T {
        if r <= self.inner_radius {
            T::one()
        } else if r >= self.outer_radius {
            T::zero()
        } else {
            let u = (r - self.inner_radius) / (self.outer_radius - self.inner_radius);
            T::one() - u * u * (T::lit(3.0) - T::lit(2.0) * u)
        }
    }

    /// Same cutoff around a different base field; used when the base is
    /// re-expressed in orthonormal coordinates (norm preserved).
    pub fn with_base(&self, base: PolynomialVectorField<T>) -> Self {
        Self {
            base,
            inner_radius: self.inner_radius,
            outer_radius: self.outer_radius,
        }
    }

    pub fn describe(&self, names: &[String]) -> String {
        format!(
            "taper[{}, {}]({})",
            self.inner_radius,
            self.outer_radius,
            self.base.display_with(names)
        )
    }
}

impl<T: Scalar> std::fmt::Display for TaperedField<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.describe(&default_names(self.base.dim())))
    }
}

/// The standalone `truncate` operation.
pub fn truncate<T: Scalar>(
    field: &PolynomialVectorField<T>,
    inner_radius: T,
    outer_radius: T,
) -> Result<TaperedField<T>> {
    TaperedField::new(field.clone(), inner_radius, outer_radius)
}

impl<T: Scalar> VectorField<T> for TaperedField<T> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    #[inline]
    fn eval_into(&self, x: &[T], out: &mut [T]) {
        let w = self.weight(norm(x));
        if w == T::zero() {
            out.iter_mut().for_each(|o| *o = T::zero());
            return;
        }
        self.base.eval_into(x, out);
        if w != T::one() {
            out.iter_mut().for_each(|o| *o = *o * w);
        }
    }

    fn eval(&self, x: &[T]) -> Result<Vec<T>> {
        check_dim("tapered field evaluation", self.dim(), x.len())?;
        let mut out = vec![T::zero(); self.dim()];
        self.eval_into(x, &mut out);
        Ok(out)
    }
}

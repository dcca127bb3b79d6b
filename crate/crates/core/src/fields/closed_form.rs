use super::polynomial::Polynomial;
use super::vector::check_dim;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A scalar function with a gradient, used as the defining function `G` of a
/// manifold `{G = 0}`.
pub trait ScalarFunction<T: Scalar>: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[T]) -> Result<T>;
    fn gradient(&self, x: &[T]) -> Result<Vec<T>>;
}

impl<T: Scalar> ScalarFunction<T> for Polynomial<T> {
    fn dim(&self) -> usize {
        Polynomial::dim(self)
    }

    fn value(&self, x: &[T]) -> Result<T> {
        self.try_eval(x)
    }

    fn gradient(&self, x: &[T]) -> Result<Vec<T>> {
        check_dim("polynomial gradient", Polynomial::dim(self), x.len())?;
        Ok(self.gradient().iter().map(|d| d.eval(x)).collect())
    }
}

/// Hand-coded non-polynomial defining functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClosedForm {
    /// `G(x, y) = y/x - ln x`, defined for `x > 0`.
    LogGraph,
}

impl ClosedForm {
    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "log-graph" => Some(Self::LogGraph),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::LogGraph => "log-graph",
        }
    }
}

impl<T: Scalar> ScalarFunction<T> for ClosedForm {
    fn dim(&self) -> usize {
        match self {
            Self::LogGraph => 2,
        }
    }

    fn value(&self, x: &[T]) -> Result<T> {
        check_dim("closed-form value", 2, x.len())?;
        match self {
            Self::LogGraph => {
                if !(x[0] > T::zero()) {
                    return Err(Error::OutsideDomain(format!(
                        "y/x - ln x needs x > 0, got x = {}",
                        x[0]
                    )));
                }
                Ok(x[1] / x[0] - x[0].ln())
            }
        }
    }

    fn gradient(&self, x: &[T]) -> Result<Vec<T>> {
        check_dim("closed-form gradient", 2, x.len())?;
        match self {
            Self::LogGraph => {
                if !(x[0] > T::zero()) {
                    return Err(Error::UndefinedGradient(format!("({}, {})", x[0], x[1])));
                }
                let inv = x[0].recip();
                Ok(vec![-x[1] * inv * inv - inv, inv])
            }
        }
    }
}

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::ScalarFunction;
use crate::scalar::{all_finite, Scalar};

/// Axis-aligned box `prod_i [lower_i, upper_i]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxisBox<T> {
    lower: Vec<T>,
    upper: Vec<T>,
}

impl<T: Scalar> AxisBox<T> {
    pub fn new(bounds: &[(T, T)]) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::InvalidParameter("box needs at least one axis".into()));
        }
        for (i, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "axis {i} of box has invalid bounds [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self {
            lower: bounds.iter().map(|b| b.0).collect(),
            upper: bounds.iter().map(|b| b.1).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[T] {
        &self.lower
    }

    pub fn upper(&self) -> &[T] {
        &self.upper
    }

    pub fn contains(&self, x: &[T]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&v, (&lo, &hi))| v >= lo && v <= hi)
    }

    pub fn contains_box(&self, other: &Self) -> bool {
        other.dim() == self.dim()
            && (0..self.dim()).all(|i| other.lower[i] >= self.lower[i] && other.upper[i] <= self.upper[i])
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<T> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&lo, &hi)| lo + (hi - lo) * T::lit(rng.random::<f64>()))
            .collect()
    }
}

/// Manifold `M = {x in domain : G(x) = 0}` with normal `grad G`.
#[derive(Clone)]
pub struct GraphManifold<T> {
    name: String,
    g: Arc<dyn ScalarFunction<T>>,
    domain: AxisBox<T>,
    bracket_hint: Option<(T, T)>,
}

impl<T: Scalar> GraphManifold<T> {
    pub fn new(name: impl Into<String>, g: Arc<dyn ScalarFunction<T>>, domain: AxisBox<T>) -> Result<Self> {
        if g.dim() != domain.dim() {
            return Err(Error::DimensionMismatch {
                context: "manifold domain",
                expected: g.dim(),
                got: domain.dim(),
            });
        }
        Ok(Self {
            name: name.into(),
            g,
            domain,
            bracket_hint: None,
        })
    }

    /// Search interval for the dependent coordinate when the manifold is
    /// used as a graph over the remaining coordinates.
    pub fn with_bracket_hint(mut self, lo: T, hi: T) -> Self {
        self.bracket_hint = Some((lo, hi));
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &AxisBox<T> {
        &self.domain
    }

    pub fn bracket_hint(&self) -> Option<(T, T)> {
        self.bracket_hint
    }

    pub fn function(&self) -> &Arc<dyn ScalarFunction<T>> {
        &self.g
    }

    fn check_domain(&self, x: &[T]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "manifold point",
                expected: self.dim(),
                got: x.len(),
            });
        }
        if !self.domain.contains(x) {
            return Err(Error::OutsideDomain(format!(
                "{x:?} not in the domain of {}",
                self.name
            )));
        }
        Ok(())
    }

    pub fn value(&self, x: &[T]) -> Result<T> {
        self.check_domain(x)?;
        let v = self.g.value(x)?;
        if !v.is_finite() {
            return Err(Error::OutsideDomain(format!("G is not finite at {x:?}")));
        }
        Ok(v)
    }

    pub fn gradient(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_domain(x)?;
        let grad = self.g.gradient(x)?;
        if !all_finite(&grad) {
            return Err(Error::UndefinedGradient(format!("{x:?}")));
        }
        Ok(grad)
    }
}

impl<T> fmt::Debug for GraphManifold<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GraphManifold({})", self.name)
    }
}

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{
    default_names, MatrixField, PolynomialMatrixField, PolynomialVectorField, TaperedField, VectorField,
};
use crate::scalar::Scalar;

/// Which stochastic calculus the diffusion term is read in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Calculus {
    Ito,
    Stratonovich,
}

impl fmt::Display for Calculus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Calculus::Ito => "ito",
            Calculus::Stratonovich => "stratonovich",
        })
    }
}

/// Drift coefficient of an [`SdeSystem`].
#[derive(Clone)]
pub enum Drift<T> {
    Polynomial(PolynomialVectorField<T>),
    /// `exact(x) + tapered(x)`: a polynomial part left untouched (the linear
    /// part, any calculus correction) plus a radially truncated nonlinearity.
    Tapered {
        exact: PolynomialVectorField<T>,
        tapered: TaperedField<T>,
    },
    Custom(Arc<dyn VectorField<T>>),
}

impl<T: Scalar> Drift<T> {
    pub fn as_polynomial(&self) -> Option<&PolynomialVectorField<T>> {
        match self {
            Drift::Polynomial(p) => Some(p),
            _ => None,
        }
    }

    pub fn describe(&self, names: &[String]) -> String {
        match self {
            Drift::Polynomial(p) => p.display_with(names),
            Drift::Tapered { exact, tapered } => {
                format!("{} + {}", exact.display_with(names), tapered.describe(names))
            }
            Drift::Custom(_) => "<evaluable field>".to_string(),
        }
    }
}

impl<T: Scalar> VectorField<T> for Drift<T> {
    fn dim(&self) -> usize {
        match self {
            Drift::Polynomial(p) => p.dim(),
            Drift::Tapered { exact, .. } => exact.dim(),
            Drift::Custom(f) => f.dim(),
        }
    }

    #[inline]
    fn eval_into(&self, x: &[T], out: &mut [T]) {
        match self {
            Drift::Polynomial(p) => p.eval_into(x, out),
            Drift::Tapered { exact, tapered } => {
                exact.eval_into(x, out);
                let w = tapered.weight(crate::scalar::norm(x));
                if w != T::zero() {
                    for (o, c) in out.iter_mut().zip(tapered.base().components()) {
                        *o = *o + w * c.eval(x);
                    }
                }
            }
            Drift::Custom(f) => f.eval_into(x, out),
        }
    }
}

impl<T> fmt::Debug for Drift<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Drift::Polynomial(_) => f.write_str("Drift::Polynomial"),
            Drift::Tapered { .. } => f.write_str("Drift::Tapered"),
            Drift::Custom(_) => f.write_str("Drift::Custom"),
        }
    }
}

/// Diffusion coefficient of an [`SdeSystem`]: an `n x m` matrix field.
#[derive(Clone)]
pub enum Diffusion<T> {
    Polynomial(PolynomialMatrixField<T>),
    Custom(Arc<dyn MatrixField<T>>),
}

impl<T: Scalar> Diffusion<T> {
    pub fn as_polynomial(&self) -> Option<&PolynomialMatrixField<T>> {
        match self {
            Diffusion::Polynomial(p) => Some(p),
            Diffusion::Custom(_) => None,
        }
    }

    pub fn describe(&self, names: &[String]) -> String {
        match self {
            Diffusion::Polynomial(p) => p.display_with(names),
            Diffusion::Custom(_) => "<evaluable field>".to_string(),
        }
    }
}

impl<T: Scalar> MatrixField<T> for Diffusion<T> {
    fn dim(&self) -> usize {
        match self {
            Diffusion::Polynomial(p) => p.dim(),
            Diffusion::Custom(f) => f.dim(),
        }
    }

    fn noise_dim(&self) -> usize {
        match self {
            Diffusion::Polynomial(p) => p.noise_dim(),
            Diffusion::Custom(f) => f.noise_dim(),
        }
    }

    #[inline]
    fn eval_into(&self, x: &[T], out: &mut [T]) {
        match self {
            Diffusion::Polynomial(p) => p.eval_into(x, out),
            Diffusion::Custom(f) => f.eval_into(x, out),
        }
    }
}

impl<T> fmt::Debug for Diffusion<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diffusion::Polynomial(_) => f.write_str("Diffusion::Polynomial"),
            Diffusion::Custom(_) => f.write_str("Diffusion::Custom"),
        }
    }
}

/// `dX = drift(X) dt + diffusion(X) dW`, with `dW` read in the given calculus.
#[derive(Debug, Clone)]
pub struct SdeSystem<T> {
    dim: usize,
    noise_dim: usize,
    drift: Drift<T>,
    diffusion: Diffusion<T>,
    calculus: Calculus,
}

impl<T: Scalar> SdeSystem<T> {
    pub fn new(drift: Drift<T>, diffusion: Diffusion<T>, calculus: Calculus) -> Result<Self> {
        let dim = drift.dim();
        if dim == 0 {
            return Err(Error::InvalidParameter("system dimension must be positive".into()));
        }
        if diffusion.dim() != dim {
            return Err(Error::DimensionMismatch {
                context: "diffusion rows vs drift dimension",
                expected: dim,
                got: diffusion.dim(),
            });
        }
        if let Drift::Tapered { exact, tapered } = &drift {
            if tapered.base().dim() != exact.dim() {
                return Err(Error::DimensionMismatch {
                    context: "tapered part of drift",
                    expected: exact.dim(),
                    got: tapered.base().dim(),
                });
            }
        }
        let noise_dim = diffusion.noise_dim();
        Ok(Self {
            dim,
            noise_dim,
            drift,
            diffusion,
            calculus,
        })
    }

    pub fn polynomial(
        drift: PolynomialVectorField<T>,
        diffusion: PolynomialMatrixField<T>,
        calculus: Calculus,
    ) -> Result<Self> {
        Self::new(Drift::Polynomial(drift), Diffusion::Polynomial(diffusion), calculus)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    pub fn drift(&self) -> &Drift<T> {
        &self.drift
    }

    pub fn diffusion(&self) -> &Diffusion<T> {
        &self.diffusion
    }

    pub fn calculus(&self) -> Calculus {
        self.calculus
    }

    pub(crate) fn require(&self, calculus: Calculus) -> Result<()> {
        if self.calculus != calculus {
            return Err(Error::CalculusMismatch {
                expected: calculus,
                got: self.calculus,
            });
        }
        Ok(())
    }

    pub(crate) fn with_parts(&self, drift: Drift<T>, calculus: Calculus) -> Self {
        Self {
            dim: self.dim,
            noise_dim: self.noise_dim,
            drift,
            diffusion: self.diffusion.clone(),
            calculus,
        }
    }

    /// One line per coordinate, e.g. `dy = (-2 - y^3) dt + y dW`.
    pub fn describe_with(&self, names: &[String]) -> Vec<String> {
        let noise = |j: usize| {
            if self.noise_dim == 1 {
                "dW".to_string()
            } else {
                format!("dW{}", j + 1)
            }
        };
        let circ = if self.calculus == Calculus::Stratonovich {
            "∘"
        } else {
            ""
        };
        (0..self.dim)
            .map(|i| {
                let drift = match &self.drift {
                    Drift::Polynomial(p) => p.component(i).display_with(names),
                    Drift::Tapered { exact, tapered } => {
                        let taper = format!(
                            "taper[{}, {}]({})",
                            tapered.inner_radius(),
                            tapered.outer_radius(),
                            tapered.base().component(i).display_with(names)
                        );
                        let e = exact.component(i);
                        if e.is_zero() {
                            taper
                        } else {
                            format!("{} + {taper}", e.display_with(names))
                        }
                    }
                    Drift::Custom(_) => format!("f{}({})", i + 1, names.join(", ")),
                };
                let drift = if drift.contains(' ') && !drift.starts_with("taper[") {
                    format!("({drift})")
                } else {
                    drift
                };
                let mut line = format!("d{} = {} dt", names[i], drift);
                match &self.diffusion {
                    Diffusion::Polynomial(b) => {
                        for j in 0..self.noise_dim {
                            let e = b.entry(i, j);
                            if e.is_zero() {
                                continue;
                            }
                            let s = e.display_with(names);
                            let wrapped = if e.terms().len() > 1 { format!("({s})") } else { s };
                            line.push_str(&format!(" + {wrapped} {circ}{}", noise(j)));
                        }
                    }
                    Diffusion::Custom(_) => {
                        for j in 0..self.noise_dim {
                            line.push_str(&format!(
                                " + g{}{}({}) {circ}{}",
                                i + 1,
                                j + 1,
                                names.join(", "),
                                noise(j)
                            ));
                        }
                    }
                }
                line
            })
            .collect()
    }

    pub fn describe(&self) -> Vec<String> {
        self.describe_with(&default_names(self.dim))
    }
}

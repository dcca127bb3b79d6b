//! Turns config references (registry names or inline specs) into core objects.

use std::sync::Arc;

use anyhow::{bail, Context, Result};
use nalgebra::DMatrix;

use manifold_sde::fields::{Monomial, Polynomial, PolynomialMatrixField, PolynomialVectorField, TaperedField};
use manifold_sde::invariance::{AxisBox, GraphManifold};
use manifold_sde::registry;
use manifold_sde::sde::{convert_calculus, Drift, SdeSystem};

use crate::config::{ExperimentConfig, MonomialSpec};

/// The system a run works on, after truncation and calculus conversion.
#[derive(Debug, Clone)]
pub struct ResolvedSystem {
    pub name: String,
    pub system: SdeSystem<f64>,
    pub linear: Option<DMatrix<f64>>,
    /// Registry manifold associated with a named system.
    pub manifold: Option<&'static str>,
}

pub fn polynomial(spec: &[MonomialSpec], dim: usize) -> Result<Polynomial<f64>> {
    let terms = spec
        .iter()
        .map(|m| Monomial::new(m.coefficient, m.exponents.clone()))
        .collect();
    Ok(Polynomial::from_terms(dim, terms)?)
}

pub fn axis_box(bounds: &[[f64; 2]]) -> Result<AxisBox<f64>> {
    let pairs: Vec<(f64, f64)> = bounds.iter().map(|&[lo, hi]| (lo, hi)).collect();
    Ok(AxisBox::new(&pairs)?)
}

/// The system as written, before truncation or conversion.
pub fn base_system(cfg: &ExperimentConfig) -> Result<ResolvedSystem> {
    if let Some(name) = &cfg.system {
        let entry = registry::system::<f64>(name)?;
        return Ok(ResolvedSystem {
            name: entry.name.to_string(),
            system: entry.system,
            linear: entry.linear,
            manifold: entry.manifold,
        });
    }
    let Some(spec) = &cfg.inline_system else {
        bail!("missing `system` (or `inline_system`)");
    };
    let n = spec.drift.len();
    let drift = spec
        .drift
        .iter()
        .enumerate()
        .map(|(i, p)| polynomial(p, n).with_context(|| format!("inline_system.drift[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    let entries = spec
        .diffusion
        .entries
        .iter()
        .enumerate()
        .map(|(i, p)| polynomial(p, n).with_context(|| format!("inline_system.diffusion.entries[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    let diffusion = PolynomialMatrixField::new(n, spec.diffusion.noise_dim, entries)?;
    let system = SdeSystem::polynomial(PolynomialVectorField::new(drift)?, diffusion, spec.calculus)?;
    let linear = spec
        .linear
        .as_ref()
        .map(|rows| DMatrix::from_fn(n, n, |i, j| rows[i][j]));
    Ok(ResolvedSystem {
        name: "inline".to_string(),
        system,
        linear,
        manifold: None,
    })
}

/// Applies the optional truncation and calculus conversion.
pub fn resolve_system(cfg: &ExperimentConfig) -> Result<ResolvedSystem> {
    let mut r = base_system(cfg)?;
    if let Some(tr) = &cfg.truncation {
        let a = r
            .linear
            .as_ref()
            .context("`truncation` needs a system with a known linear part")?;
        let Drift::Polynomial(full) = r.system.drift() else {
            bail!(
                "`truncation` needs a polynomial drift; {} is already truncated or custom",
                r.name
            );
        };
        let lin = PolynomialVectorField::linear(a)?;
        let nonlinear = full.sub(&lin)?;
        let drift = Drift::Tapered {
            exact: lin,
            tapered: TaperedField::new(nonlinear, tr.inner, tr.outer)?,
        };
        r.system = SdeSystem::new(drift, r.system.diffusion().clone(), r.system.calculus())?;
    }
    if let Some(target) = cfg.calculus {
        r.system = convert_calculus(&r.system, target)?;
    }
    Ok(r)
}

/// The manifold named or written in the config, else the system's own.
pub fn resolve_manifold(cfg: &ExperimentConfig, sys: &ResolvedSystem) -> Result<GraphManifold<f64>> {
    if let Some(spec) = &cfg.inline_manifold {
        let g = polynomial(&spec.g, spec.domain.len()).context("inline_manifold.g")?;
        return Ok(GraphManifold::new("inline", Arc::new(g), axis_box(&spec.domain)?)?);
    }
    let name = match (&cfg.manifold, sys.manifold) {
        (Some(n), _) => n.as_str(),
        (None, Some(n)) => n,
        (None, None) => bail!("missing `manifold`: {} has no associated manifold", sys.name),
    };
    Ok(registry::manifold::<f64>(name)?)
}

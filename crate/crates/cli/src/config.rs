//! Experiment configuration: one strict JSON document per run.

use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};

use manifold_sde::invariance::CheckScope;
use manifold_sde::sde::Calculus;

fn default_h() -> f64 {
    1e-3
}

fn default_ensemble() -> usize {
    1
}

fn default_tol_eig() -> f64 {
    manifold_sde::center::DEFAULT_TOL_EIG
}

/// A monomial `coefficient * prod x_i^exponents[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonomialSpec {
    pub coefficient: f64,
    pub exponents: Vec<u32>,
}

/// A polynomial as a list of monomials.
pub type PolynomialSpec = Vec<MonomialSpec>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineDiffusion {
    pub noise_dim: usize,
    /// `n * noise_dim` entries, row by row.
    pub entries: Vec<PolynomialSpec>,
}

/// A polynomial system written out in the config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineSystem {
    /// Form in which the coefficients are written.
    pub calculus: Calculus,
    /// Full drift, linear part included.
    pub drift: Vec<PolynomialSpec>,
    pub diffusion: InlineDiffusion,
    /// Linear part `A` (rows), needed by `reduce`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineManifold {
    /// `G` as a polynomial.
    pub g: PolynomialSpec,
    /// `[lo, hi]` per coordinate.
    pub domain: Vec<[f64; 2]>,
}

/// Smoothly switches off the nonlinear drift between two radii.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Truncation {
    pub inner: f64,
    pub outer: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvarianceBlock {
    pub samples: usize,
    /// Sampling box, `[lo, hi]` per coordinate.
    #[serde(rename = "box")]
    pub bounds: Vec<[f64; 2]>,
    #[serde(default = "default_invariance_tol")]
    pub tol: f64,
    #[serde(default)]
    pub scope: CheckScope,
}

fn default_invariance_tol() -> f64 {
    manifold_sde::invariance::DEFAULT_INVARIANCE_TOL
}

/// Initial data `x = f(s)`, `u = h(s)` with polynomial maps in `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    /// Parameter box, `[lo, hi]` per parameter.
    pub params: Vec<[f64; 2]>,
    pub position: Vec<PolynomialSpec>,
    pub value: PolynomialSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CharacteristicsBlock {
    /// `mu`, `B1`, `B2`, ...
    pub generator: String,
    pub curve: CurveSpec,
    pub s_count: usize,
    #[serde(default)]
    pub t_start: f64,
    pub t_end: f64,
    pub h_char: f64,
    #[serde(default = "default_report_points")]
    pub report_points: usize,
    #[serde(default = "default_angle")]
    pub angle_threshold: f64,
    /// Evaluate the surface at sampled points of the reference manifold.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceBlock {
    pub samples: usize,
    #[serde(rename = "box")]
    pub bounds: Vec<[f64; 2]>,
}

fn default_report_points() -> usize {
    200
}

fn default_angle() -> f64 {
    manifold_sde::characteristics::DEFAULT_ANGLE_THRESHOLD
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareBlock {
    pub burn_in: f64,
    /// Also compare the reduced system with itself under another seed.
    #[serde(default)]
    pub self_check: bool,
    /// Registry systems on the center subspace to compare against the
    /// reduced system, e.g. a deliberately wrong reduction.
    #[serde(default)]
    pub alternatives: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyGrid {
    /// `[lo, hi]` per coordinate.
    #[serde(rename = "box")]
    pub bounds: Vec<[f64; 2]>,
    /// Nodes per axis.
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReduceBlock {
    #[serde(default = "default_tol_eig")]
    pub tol_eig: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare: Option<CompareBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy: Option<EnergyGrid>,
}

impl Default for ReduceBlock {
    fn default() -> Self {
        Self {
            tol_eig: default_tol_eig(),
            compare: None,
            energy: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct EscapeBlock {
    /// Step sizes to run; defaults to the top-level `h`.
    #[serde(default)]
    pub h_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrongBlock {
    /// `dX = a X dt + b X o dW`.
    pub a: f64,
    pub b: f64,
    pub x0: f64,
    pub paths: usize,
    pub h_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegralDemoBlock {
    pub paths: usize,
    pub h_values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strong: Option<StrongBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Registry name; exclusive with `inline_system`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inline_system: Option<InlineSystem>,
    /// Form to run the system in; converted when it differs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calculus: Option<Calculus>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<Truncation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default = "default_h")]
    pub h: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_ensemble")]
    pub ensemble: usize,
    /// Registry name; exclusive with `inline_manifold`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifold: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inline_manifold: Option<InlineManifold>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub invariance: Option<InvarianceBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub characteristics: Option<CharacteristicsBlock>,
    #[serde(default)]
    pub reduce: ReduceBlock,
    #[serde(default)]
    pub escape: EscapeBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integral_demo: Option<IntegralDemoBlock>,
}

/// Parses and validates a config. Errors name the offending key path and
/// the line and column in `text`.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: ExperimentConfig = match serde_path_to_error::deserialize(de) {
        Ok(c) => c,
        Err(e) => {
            let path = e.path().to_string();
            let inner = e.into_inner();
            bail!("at `{path}`: {inner}");
        }
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_config(&text).with_context(|| format!("invalid config {}", path.display()))
}

fn positive(name: &str, v: f64) -> Result<()> {
    ensure!(v > 0.0 && v.is_finite(), "`{name}` must be positive, got {v}");
    Ok(())
}

fn check_box(name: &str, b: &[[f64; 2]]) -> Result<()> {
    ensure!(!b.is_empty(), "`{name}` must have at least one axis");
    for (i, [lo, hi]) in b.iter().enumerate() {
        ensure!(lo < hi, "`{name}[{i}]`: lower bound {lo} is not below upper bound {hi}");
    }
    Ok(())
}

/// Every monomial of `poly` must have `dim` exponents.
fn check_poly(name: &str, poly: &[MonomialSpec], dim: usize) -> Result<()> {
    for (k, m) in poly.iter().enumerate() {
        ensure!(
            m.exponents.len() == dim,
            "`{name}[{k}]`: monomial {} * x^{:?} has {} exponents, expected {dim}",
            m.coefficient,
            m.exponents,
            m.exponents.len()
        );
        ensure!(m.coefficient.is_finite(), "`{name}[{k}]`: coefficient is not finite");
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(sys) = &self.inline_system {
            let n = sys.drift.len();
            ensure!(n >= 1, "`inline_system.drift` must have at least one component");
            for (i, p) in sys.drift.iter().enumerate() {
                check_poly(&format!("inline_system.drift[{i}]"), p, n)?;
            }
            let m = sys.diffusion.noise_dim;
            ensure!(m >= 1, "`inline_system.diffusion.noise_dim` must be at least 1");
            ensure!(
                sys.diffusion.entries.len() == n * m,
                "`inline_system.diffusion.entries` needs {} entries (n = {n} rows of {m}), got {}",
                n * m,
                sys.diffusion.entries.len()
            );
            for (i, p) in sys.diffusion.entries.iter().enumerate() {
                check_poly(&format!("inline_system.diffusion.entries[{i}]"), p, n)?;
            }
            if let Some(a) = &sys.linear {
                ensure!(
                    a.len() == n && a.iter().all(|r| r.len() == n),
                    "`inline_system.linear` must be {n} x {n}"
                );
            }
        }
        if let Some(m) = &self.inline_manifold {
            check_poly("inline_manifold.g", &m.g, m.domain.len())?;
        }
        if let Some(ch) = &self.characteristics {
            let p = ch.curve.params.len();
            for (i, c) in ch.curve.position.iter().enumerate() {
                check_poly(&format!("characteristics.curve.position[{i}]"), c, p)?;
            }
            check_poly("characteristics.curve.value", &ch.curve.value, p)?;
        }
        match (&self.system, &self.inline_system) {
            (Some(name), None) => {
                ensure!(
                    manifold_sde::registry::SYSTEM_NAMES.contains(&name.as_str()),
                    "`system`: unknown system {name:?}; known: {}",
                    manifold_sde::registry::SYSTEM_NAMES.join(", ")
                );
            }
            (None, Some(_)) => {}
            (Some(_), Some(_)) => bail!("give either `system` or `inline_system`, not both"),
            // integral-demo needs no system; the others fail when resolving it
            (None, None) => {}
        }
        if let Some(name) = &self.manifold {
            ensure!(
                self.inline_manifold.is_none(),
                "give either `manifold` or `inline_manifold`, not both"
            );
            ensure!(
                manifold_sde::registry::MANIFOLD_NAMES.contains(&name.as_str()),
                "`manifold`: unknown manifold {name:?}; known: {}",
                manifold_sde::registry::MANIFOLD_NAMES.join(", ")
            );
        }
        if let Some(m) = &self.inline_manifold {
            check_box("inline_manifold.domain", &m.domain)?;
        }
        if let Some(t) = self.horizon {
            positive("T", t)?;
        }
        positive("h", self.h)?;
        ensure!(self.ensemble >= 1, "`ensemble` must be at least 1");
        if let Some(tr) = &self.truncation {
            ensure!(
                tr.inner > 0.0 && tr.inner < tr.outer,
                "`truncation`: need 0 < inner < outer, got {} and {}",
                tr.inner,
                tr.outer
            );
        }
        if let Some(inv) = &self.invariance {
            ensure!(inv.samples >= 1, "`invariance.samples` must be at least 1");
            check_box("invariance.box", &inv.bounds)?;
            positive("invariance.tol", inv.tol)?;
        }
        if let Some(ch) = &self.characteristics {
            check_box("characteristics.curve.params", &ch.curve.params)?;
            positive("characteristics.h_char", ch.h_char)?;
            ensure!(ch.t_start <= 0.0, "`characteristics.t_start` must not be positive");
            ensure!(ch.t_end >= 0.0, "`characteristics.t_end` must not be negative");
            ensure!(ch.s_count >= 4, "`characteristics.s_count` must be at least 4");
            ensure!(
                ch.angle_threshold >= 0.0,
                "`characteristics.angle_threshold` must not be negative"
            );
            if let Some(r) = &ch.reference {
                ensure!(r.samples >= 1, "`characteristics.reference.samples` must be at least 1");
                check_box("characteristics.reference.box", &r.bounds)?;
            }
        }
        positive("reduce.tol_eig", self.reduce.tol_eig)?;
        if let Some(c) = &self.reduce.compare {
            ensure!(c.burn_in >= 0.0, "`reduce.compare.burn_in` must not be negative");
            for name in &c.alternatives {
                ensure!(
                    manifold_sde::registry::SYSTEM_NAMES.contains(&name.as_str()),
                    "`reduce.compare.alternatives`: unknown system {name:?}"
                );
            }
        }
        if let Some(e) = &self.reduce.energy {
            check_box("reduce.energy.box", &e.bounds)?;
            ensure!(e.nodes >= 2, "`reduce.energy.nodes` must be at least 2");
        }
        for (i, &h) in self.escape.h_values.iter().enumerate() {
            positive(&format!("escape.h_values[{i}]"), h)?;
        }
        if let Some(d) = &self.integral_demo {
            ensure!(d.paths >= 1, "`integral_demo.paths` must be at least 1");
            ensure!(!d.h_values.is_empty(), "`integral_demo.h_values` must not be empty");
            for (i, &h) in d.h_values.iter().enumerate() {
                positive(&format!("integral_demo.h_values[{i}]"), h)?;
            }
            if let Some(s) = &d.strong {
                ensure!(s.paths >= 1, "`integral_demo.strong.paths` must be at least 1");
                for (i, &h) in s.h_values.iter().enumerate() {
                    positive(&format!("integral_demo.strong.h_values[{i}]"), h)?;
                }
            }
        }
        Ok(())
    }

    /// Horizon, required by the simulating subcommands.
    pub fn require_horizon(&self) -> Result<f64> {
        self.horizon.context("missing `T`")
    }

    pub fn require_x0(&self) -> Result<&[f64]> {
        self.x0.as_deref().context("missing `x0`")
    }

    /// Compact JSON echo of the validated config, defaults filled in.
    pub fn echo(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

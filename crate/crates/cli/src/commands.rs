//! One function per subcommand. Each returns the lines to print and writes
//! its artifacts through [`Artifacts`].

use std::fmt::Write as _;

use anyhow::{ensure, Context, Result};
use serde::Serialize;

use manifold_sde::center::{
    build_reduced_system, collect_marginals, compare_marginals, lyapunov_rate, spectral_split, EnsembleSpec,
    LongTimeComparison, LongTimeConfig, SplitSummary,
};
use manifold_sde::characteristics::{
    evaluate_surface, solve_invariance_pde, ConsistencyReport, Generator, InitialCurve, PdeSetup, SurfaceGrid,
};
use manifold_sde::fields::{default_names, Polynomial, PolynomialMatrixField, PolynomialVectorField};
use manifold_sde::invariance::{escape_diagnostic, sample_manifold_points, verify_invariance, EscapeStats};
use manifold_sde::registry;
use manifold_sde::sde::{
    convert_calculus, ito_integral, run_ensemble, simulate, simulate_ensemble, simulate_on_path, stratonovich_integral,
    write_ensemble_csv, BrownianPath, Calculus, Drift, SdeSystem,
};

use crate::config::{ExperimentConfig, IntegralDemoBlock, StrongBlock};
use crate::output::Artifacts;
use crate::resolve::{axis_box, polynomial, resolve_manifold, resolve_system};

pub fn simulate_cmd(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Vec<String>> {
    let r = resolve_system(cfg)?;
    let x0 = cfg.require_x0()?;
    let horizon = cfg.require_horizon()?;
    let mut buf = Vec::new();
    if cfg.ensemble == 1 {
        let tr = simulate(&r.system, x0, horizon, cfg.h, cfg.seed)?;
        tr.write_csv(&mut buf)?;
        let path = art.text("trajectory.csv", &buf)?;
        let mut lines = vec![format!("{} steps -> {}", tr.len() - 1, path.display())];
        if let Some(l) = tr.lifetime() {
            lines.push(format!("stopped at t = {} ({:?})", l.time, l.reason));
        }
        Ok(lines)
    } else {
        let trs = simulate_ensemble(&r.system, x0, horizon, cfg.h, cfg.seed, cfg.ensemble)?;
        write_ensemble_csv(&trs, &mut buf)?;
        let path = art.text("ensemble.csv", &buf)?;
        let stopped = trs.iter().filter(|t| t.lifetime().is_some()).count();
        Ok(vec![format!(
            "{} trajectories ({stopped} stopped early) -> {}",
            trs.len(),
            path.display()
        )])
    }
}

fn other(c: Calculus) -> Calculus {
    match c {
        Calculus::Ito => Calculus::Stratonovich,
        Calculus::Stratonovich => Calculus::Ito,
    }
}

/// Converts the system to `calculus` (default: the other form) and prints
/// the canonical coefficients.
pub fn convert_cmd(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Vec<String>> {
    let mut source_cfg = cfg.clone();
    source_cfg.calculus = None;
    let r = resolve_system(&source_cfg)?;
    let source = &r.system;
    let target = cfg.calculus.unwrap_or_else(|| other(source.calculus()));
    ensure!(
        target != source.calculus(),
        "{} is already in {} form; nothing to convert",
        r.name,
        target
    );
    let converted = convert_calculus(source, target)?;
    let back = convert_calculus(&converted, source.calculus())?;
    let exact = match (source.drift(), back.drift()) {
        (Drift::Polynomial(a), Drift::Polynomial(b)) => a == b,
        (Drift::Tapered { exact: a, .. }, Drift::Tapered { exact: b, .. }) => a == b,
        _ => false,
    };
    let names = default_names(source.dim());
    let mut lines = vec![format!("{} form:", source.calculus())];
    lines.extend(source.describe().into_iter().map(|l| format!("  {l}")));
    lines.push(format!("{target} form:"));
    lines.extend(converted.describe().into_iter().map(|l| format!("  {l}")));
    lines.push(format!("drift: {}", converted.drift().describe(&names)));
    if let (Some(a), Drift::Polynomial(p)) = (&r.linear, converted.drift()) {
        let nonlinear = p.sub(&PolynomialVectorField::linear(a)?)?;
        lines.push(format!("nonlinear: {}", nonlinear.display_with(&names)));
    }
    lines.push(format!("round trip: {}", if exact { "exact" } else { "NOT exact" }));
    let mut body = String::new();
    for l in &lines {
        writeln!(body, "{l}")?;
    }
    art.text("converted.txt", body.as_bytes())?;
    ensure!(exact, "round trip did not restore the input coefficients");
    Ok(lines)
}

pub fn verify_invariance_cmd(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Vec<String>> {
    let block = cfg.invariance.as_ref().context("missing `invariance` block")?;
    let r = resolve_system(cfg)?;
    let manifold = resolve_manifold(cfg, &r)?;
    let bounds = axis_box(&block.bounds)?;
    let report = verify_invariance(
        &r.system,
        &manifold,
        &bounds,
        block.samples,
        cfg.seed,
        block.tol,
        block.scope,
    )?;
    let path = art.json("invariance.json", &report)?;
    let mut lines = vec![
        format!(
            "verdict: {:?} ({} points, tol {:e})",
            report.verdict, report.n_samples, report.tol
        ),
        format!("max |mu . grad G|: {:e}", report.max_mu_residual),
    ];
    for (j, c) in report.max_column_residuals.iter().enumerate() {
        lines.push(format!("max |B{} . grad G|: {:e}", j + 1, c));
    }
    if report.short {
        lines.push(format!(
            "only {} of {} points found",
            report.n_samples, report.n_requested
        ));
    }
    lines.push(format!("-> {}", path.display()));
    Ok(lines)
}

#[derive(Debug, Serialize)]
struct SurfaceInfo {
    s_count: usize,
    t_start: f64,
    t_end: f64,
    h: f64,
    truncated: Vec<usize>,
    footprint: Vec<[f64; 2]>,
    value_range: [f64; 2],
}

#[derive(Debug, Serialize)]
struct ReferencePoint {
    x: Vec<f64>,
    /// Surface value at `x`; `None` when the point could not be located.
    u: Option<f64>,
}

#[derive(Debug, Serialize)]
struct ReferenceCheck {
    manifold: String,
    samples: usize,
    located: usize,
    max_abs_value: f64,
    points: Vec<ReferencePoint>,
}

#[derive(Debug, Serialize)]
struct CharacteristicsOutput {
    surface: SurfaceInfo,
    consistency: ConsistencyReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    reference: Option<ReferenceCheck>,
}

pub fn characteristics_cmd(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Vec<String>> {
    let block = cfg
        .characteristics
        .as_ref()
        .context("missing `characteristics` block")?;
    let r = resolve_system(cfg)?;
    let generator: Generator = block.generator.parse().context("characteristics.generator")?;
    let p = block.curve.params.len();
    let position = block
        .curve
        .position
        .iter()
        .map(|c| polynomial(c, p))
        .collect::<Result<Vec<_>>>()?;
    let curve = InitialCurve::from_polynomials(
        axis_box(&block.curve.params)?,
        position,
        polynomial(&block.curve.value, p)?,
    )?;
    let mut setup =
        PdeSetup::new(SurfaceGrid::new(block.s_count, block.t_end, block.h_char).with_t_start(block.t_start));
    setup.angle_threshold = block.angle_threshold;
    setup.report_points = block.report_points;
    let sol = solve_invariance_pde(&r.system, generator, &curve, &setup)?;
    let surface = &sol.surface;

    let mut csv = Vec::new();
    surface.write_csv(&mut csv)?;
    let csv_path = art.text("surface.csv", &csv)?;

    let reference = match &block.reference {
        Some(rb) => {
            let manifold = resolve_manifold(cfg, &r)?;
            let sample = sample_manifold_points(&manifold, &axis_box(&rb.bounds)?, rb.samples, cfg.seed)?;
            let points: Vec<ReferencePoint> = sample
                .points
                .iter()
                .map(|x| ReferencePoint {
                    x: x.clone(),
                    u: evaluate_surface(surface, x).ok(),
                })
                .collect();
            let located = points.iter().filter(|p| p.u.is_some()).count();
            let max_abs_value = points.iter().filter_map(|p| p.u).fold(0.0, |m: f64, u| m.max(u.abs()));
            Some(ReferenceCheck {
                manifold: manifold.name().to_string(),
                samples: points.len(),
                located,
                max_abs_value,
                points,
            })
        }
        None => None,
    };
    let (lo, hi) = surface.value_range();
    let fp = surface.footprint();
    let out = CharacteristicsOutput {
        surface: SurfaceInfo {
            s_count: surface.s_count(),
            t_start: block.t_start,
            t_end: block.t_end,
            h: block.h_char,
            truncated: surface.truncated().to_vec(),
            footprint: fp.lower().iter().zip(fp.upper()).map(|(&a, &b)| [a, b]).collect(),
            value_range: [lo, hi],
        },
        consistency: sol.report,
        reference,
    };
    let json_path = art.json("consistency.json", &out)?;

    let c = &out.consistency;
    let mut lines = vec![
        format!(
            "non-characteristic: {} (min angle {:.4e} rad, threshold {:e})",
            if c.non_characteristic.passed { "ok" } else { "FAILED" },
            c.non_characteristic.min_angle,
            c.non_characteristic.threshold
        ),
        format!("zero level present: {}", c.zero_level),
    ];
    for g in &c.residuals {
        lines.push(format!(
            "{}{}: max |V . grad u| = {:.3e}, mean {:.3e}",
            g.generator,
            if g.driver { " (driver)" } else { "" },
            g.max_abs,
            g.mean_abs
        ));
    }
    if let Some(rc) = &out.reference {
        lines.push(format!(
            "{}: located {}/{} points, max |u| = {:.3e}",
            rc.manifold, rc.located, rc.samples, rc.max_abs_value
        ));
    }
    lines.push(format!("-> {}, {}", csv_path.display(), json_path.display()));
    Ok(lines)
}

#[derive(Debug, Serialize)]
struct ReduceOutput {
    system: String,
    calculus: Calculus,
    split: SplitSummary,
    coordinates: Vec<String>,
    equations: Vec<String>,
    drift: String,
    diffusion: String,
    assumptions: Vec<&'static str>,
}

const REDUCTION_ASSUMPTIONS: &[&str] = &[
    "the zero eigenvalue of A is semisimple and every other eigenvalue has negative real part (checked)",
    "one Wiener process per coordinate, so the noise restricts to P_c B(E_c xi) E_c (checked)",
    "the reduced flow is structurally stable on the center subspace (assumed, not checked)",
];

#[derive(Debug, Serialize)]
struct Alternative {
    system: String,
    /// `full` is the reduced system, `reduced` the alternative.
    comparison: LongTimeComparison,
}

#[derive(Debug, Serialize)]
struct CompareOutput {
    full_vs_reduced: LongTimeComparison,
    #[serde(skip_serializing_if = "Option::is_none")]
    reduced_self: Option<LongTimeComparison>,
    alternatives: Vec<Alternative>,
}

pub fn reduce_cmd(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Vec<String>> {
    let r = resolve_system(cfg)?;
    let linear = r
        .linear
        .as_ref()
        .with_context(|| format!("{} has no linear part to split", r.name))?;
    let split = spectral_split(linear, cfg.reduce.tol_eig)?;
    let reduced = build_reduced_system(&r.system, linear, &split)?;
    let full_names = default_names(r.system.dim());
    let names = reduced.coordinate_names(&full_names);
    let equations = reduced.describe();
    let inner = reduced.inner();
    let out = ReduceOutput {
        system: r.name.clone(),
        calculus: inner.calculus(),
        split: split.summary(),
        coordinates: names.clone(),
        equations: equations.clone(),
        drift: inner.drift().describe(&names),
        diffusion: inner.diffusion().describe(&names),
        assumptions: REDUCTION_ASSUMPTIONS.to_vec(),
    };
    let mut lines = vec![format!("center dimension k = {}", split.k())];
    lines.extend(equations.iter().cloned());
    let mut body = String::new();
    for l in &lines {
        writeln!(body, "{l}")?;
    }
    writeln!(body, "drift: {}", out.drift)?;
    writeln!(body, "diffusion: {}", out.diffusion)?;
    art.text("reduced.txt", body.as_bytes())?;
    art.json("reduce.json", &out)?;

    if let Some(grid) = &cfg.reduce.energy {
        ensure!(
            grid.bounds.len() == r.system.dim(),
            "`reduce.energy.box` has {} axes, the system has {}",
            grid.bounds.len(),
            r.system.dim()
        );
        let mut csv = String::new();
        let header: Vec<String> = full_names.iter().cloned().chain(["rate".to_string()]).collect();
        writeln!(csv, "{}", header.join(","))?;
        let n = r.system.dim();
        let total = grid.nodes.pow(n as u32);
        let mut x = vec![0.0; n];
        let mut max_rate = f64::NEG_INFINITY;
        for idx in 0..total {
            let mut rem = idx;
            for i in (0..n).rev() {
                let [lo, hi] = grid.bounds[i];
                let k = rem % grid.nodes;
                rem /= grid.nodes;
                x[i] = lo + (hi - lo) * k as f64 / (grid.nodes - 1) as f64;
            }
            let rate = lyapunov_rate(&r.system, &x)?;
            max_rate = max_rate.max(rate);
            let row: Vec<String> = x.iter().chain(std::iter::once(&rate)).map(|v| v.to_string()).collect();
            writeln!(csv, "{}", row.join(","))?;
        }
        art.text("energy_rate.csv", csv.as_bytes())?;
        lines.push(format!("energy rate on {total} grid points, max {max_rate:.6}"));
    }

    if let Some(cmp) = &cfg.reduce.compare {
        let lt = LongTimeConfig {
            horizon: cfg.require_horizon()?,
            burn_in: cmp.burn_in,
            h: cfg.h,
            ensemble: cfg.ensemble,
        };
        let x0 = cfg.require_x0()?;
        let xi0 = split.project(x0);
        let e = cfg.ensemble as u64;
        let full = collect_marginals(
            &EnsembleSpec {
                system: &r.system,
                x0,
                projection: Some(split.center_projection()),
                seed: cfg.seed,
                stream_offset: 0,
            },
            &lt,
        )?;
        let reduced_spec = |seed| EnsembleSpec {
            system: inner,
            x0: &xi0,
            projection: None,
            seed,
            stream_offset: e,
        };
        let red = collect_marginals(&reduced_spec(cfg.seed), &lt)?;
        let main = compare_marginals(&full, &red, &lt)?;
        lines.push(format!(
            "KS(full, reduced) = {:.4} over {} / {} samples",
            main.ks_distance, main.n_full, main.n_reduced
        ));
        let reduced_self = if cmp.self_check {
            let again = collect_marginals(&reduced_spec(cfg.seed.wrapping_add(1)), &lt)?;
            let c = compare_marginals(&red, &again, &lt)?;
            lines.push(format!("KS(reduced, reduced with seed + 1) = {:.4}", c.ks_distance));
            Some(c)
        } else {
            None
        };
        let mut alternatives = Vec::new();
        for (i, name) in cmp.alternatives.iter().enumerate() {
            let alt = registry::system::<f64>(name)?;
            ensure!(
                alt.system.dim() == split.k(),
                "alternative {name} has dimension {}, the center subspace {}",
                alt.system.dim(),
                split.k()
            );
            let m = collect_marginals(
                &EnsembleSpec {
                    system: &alt.system,
                    x0: &xi0,
                    projection: None,
                    seed: cfg.seed,
                    stream_offset: (2 + i as u64) * e,
                },
                &lt,
            )?;
            let c = compare_marginals(&red, &m, &lt)?;
            lines.push(format!("KS(reduced, {name}) = {:.4}", c.ks_distance));
            alternatives.push(Alternative {
                system: name.clone(),
                comparison: c,
            });
        }
        art.json(
            "compare.json",
            &CompareOutput {
                full_vs_reduced: main,
                reduced_self,
                alternatives,
            },
        )?;
    }
    Ok(lines)
}

#[derive(Debug, Serialize)]
struct EscapeOutput {
    manifold: String,
    runs: Vec<EscapeStats>,
    /// Terminal median of run `i` over that of run `i + 1`.
    median_ratios: Vec<f64>,
}

pub fn escape_cmd(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Vec<String>> {
    let r = resolve_system(cfg)?;
    let manifold = resolve_manifold(cfg, &r)?;
    let x0 = cfg.require_x0()?;
    let horizon = cfg.require_horizon()?;
    let h_values = if cfg.escape.h_values.is_empty() {
        vec![cfg.h]
    } else {
        cfg.escape.h_values.clone()
    };
    let runs = h_values
        .iter()
        .map(|&h| escape_diagnostic(&r.system, &manifold, x0, horizon, h, cfg.ensemble, cfg.seed))
        .collect::<manifold_sde::Result<Vec<_>>>()?;
    let median_ratios: Vec<f64> = runs
        .windows(2)
        .map(|w| w[0].terminal.median / w[1].terminal.median)
        .collect();
    let mut lines: Vec<String> = runs
        .iter()
        .map(|s| {
            format!(
                "h = {}: median |G(X_T)| = {:.4e} ({} of {} stopped early)",
                s.h, s.terminal.median, s.stopped, s.ensemble
            )
        })
        .collect();
    for (w, ratio) in h_values.windows(2).zip(&median_ratios) {
        lines.push(format!("median ratio h = {} -> {}: {ratio:.3}", w[0], w[1]));
    }
    art.json(
        "escape.json",
        &EscapeOutput {
            manifold: manifold.name().to_string(),
            runs,
            median_ratios,
        },
    )?;
    Ok(lines)
}

fn ratio_cell(prev: Option<f64>, cur: f64) -> String {
    prev.map_or_else(String::new, |p| (p / cur).to_string())
}

/// Ito and Stratonovich sums of `W dW` against their closed forms.
fn integral_table(block: &IntegralDemoBlock, horizon: f64, seed: u64) -> Result<(String, Vec<String>)> {
    let mut csv = String::from("h,paths,strat_max_abs_error,ito_rms_error,ito_rms_ratio\n");
    let mut lines = Vec::new();
    let mut prev = None;
    for &h in &block.h_values {
        let errs = run_ensemble(block.paths, |i| -> manifold_sde::Result<(f64, f64)> {
            let path = BrownianPath::<f64>::sample(1, horizon, h, seed, i as u64)?;
            let w = path.cumulative(0);
            let wt = w[w.len() - 1];
            let strat = stratonovich_integral(&w, &path)? - 0.5 * wt * wt;
            let ito = ito_integral(&w, &path)? - (0.5 * wt * wt - 0.5 * path.horizon());
            Ok((strat.abs(), ito))
        })
        .into_iter()
        .collect::<manifold_sde::Result<Vec<_>>>()?;
        let strat_max = errs.iter().fold(0.0, |m: f64, e| m.max(e.0));
        let rms = (errs.iter().map(|e| e.1 * e.1).sum::<f64>() / errs.len() as f64).sqrt();
        writeln!(csv, "{h},{},{strat_max},{rms},{}", block.paths, ratio_cell(prev, rms))?;
        lines.push(format!(
            "h = {h}: Stratonovich max error {strat_max:.2e}, Ito RMS error {rms:.4e}"
        ));
        prev = Some(rms);
    }
    Ok((csv, lines))
}

/// Heun on `dX = a X dt + b X o dW` against `x0 exp(a T + b W_T)`, every
/// step size driven by the same fine paths.
fn strong_table(block: &StrongBlock, horizon: f64, seed: u64) -> Result<(String, Vec<String>)> {
    ensure!(
        !block.h_values.is_empty(),
        "`integral_demo.strong.h_values` must not be empty"
    );
    let fine = block.h_values.iter().copied().fold(f64::INFINITY, f64::min);
    let factors = block
        .h_values
        .iter()
        .map(|&h| {
            let f = (h / fine).round();
            ensure!(
                (f * fine - h).abs() <= 1e-9 * h,
                "strong step {h} is not a multiple of the finest step {fine}"
            );
            Ok(f as usize)
        })
        .collect::<Result<Vec<_>>>()?;
    let sys = SdeSystem::polynomial(
        PolynomialVectorField::new(vec![Polynomial::from_pairs(1, &[(block.a, &[1])])?])?,
        PolynomialMatrixField::new(1, 1, vec![Polynomial::from_pairs(1, &[(block.b, &[1])])?])?,
        Calculus::Stratonovich,
    )?;
    let per_path = run_ensemble(block.paths, |i| -> manifold_sde::Result<Vec<f64>> {
        let path = BrownianPath::<f64>::sample(1, horizon, fine, seed, i as u64)?;
        let exact = block.x0 * (block.a * horizon + block.b * path.terminal()[0]).exp();
        factors
            .iter()
            .map(|&f| {
                let coarse = path.coarsen(f)?;
                let tr = simulate_on_path(&sys, &[block.x0], &coarse, None)?;
                Ok((tr.final_state()[0] - exact).abs())
            })
            .collect()
    })
    .into_iter()
    .collect::<manifold_sde::Result<Vec<_>>>()?;
    let mut csv = String::from("h,paths,mean_abs_error,order\n");
    let mut lines = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for (j, &h) in block.h_values.iter().enumerate() {
        let mean = per_path.iter().map(|e| e[j]).sum::<f64>() / per_path.len() as f64;
        let order = prev.map_or_else(String::new, |(ph, pe)| ((pe / mean).ln() / (ph / h).ln()).to_string());
        writeln!(csv, "{h},{},{mean},{order}", block.paths)?;
        lines.push(format!("strong h = {h}: mean |X_T - exact| = {mean:.4e}"));
        prev = Some((h, mean));
    }
    Ok((csv, lines))
}

pub fn integral_demo_cmd(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Vec<String>> {
    let block = cfg.integral_demo.as_ref().context("missing `integral_demo` block")?;
    let horizon = cfg.require_horizon()?;
    let (csv, mut lines) = integral_table(block, horizon, cfg.seed)?;
    art.text("integrals.csv", csv.as_bytes())?;
    if let Some(strong) = &block.strong {
        let (csv, more) = strong_table(strong, horizon, cfg.seed)?;
        art.text("strong.csv", csv.as_bytes())?;
        lines.extend(more);
    }
    Ok(lines)
}

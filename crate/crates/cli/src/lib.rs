//! Experiment runner: strict JSON configs, named systems from the registry,
//! and one subcommand per experiment, each writing CSV or JSON artifacts.

mod commands;
pub mod config;
pub mod output;
pub mod resolve;

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

pub use config::{load_config, parse_config, ExperimentConfig};
use output::Artifacts;

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "MANIFOLD_SDE_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::Subcommand)]
pub enum Subcommand {
    /// Trajectory CSV (or a long-format ensemble CSV when ensemble > 1).
    Simulate,
    /// Rewrite the system in the other calculus and print its coefficients.
    Convert,
    /// Check the invariance equations at sampled manifold points.
    VerifyInvariance,
    /// Build an invariant-manifold candidate by the method of characteristics.
    Characteristics,
    /// Center-manifold reduction, with optional energy grid and long-time comparison.
    Reduce,
    /// How far discretized trajectories drift off the manifold.
    Escape,
    /// Convergence tables for the Ito and Stratonovich integrals.
    IntegralDemo,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Simulate => "simulate",
            Subcommand::Convert => "convert",
            Subcommand::VerifyInvariance => "verify-invariance",
            Subcommand::Characteristics => "characteristics",
            Subcommand::Reduce => "reduce",
            Subcommand::Escape => "escape",
            Subcommand::IntegralDemo => "integral-demo",
        }
    }
}

/// What a run printed and wrote.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub lines: Vec<String>,
    pub files: Vec<PathBuf>,
}

/// Runs one subcommand, writing its artifacts into `out`.
pub fn run(cmd: Subcommand, cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let mut art = Artifacts::new(out, cmd.name(), cfg)?;
    let lines = match cmd {
        Subcommand::Simulate => commands::simulate_cmd(cfg, &mut art),
        Subcommand::Convert => commands::convert_cmd(cfg, &mut art),
        Subcommand::VerifyInvariance => commands::verify_invariance_cmd(cfg, &mut art),
        Subcommand::Characteristics => commands::characteristics_cmd(cfg, &mut art),
        Subcommand::Reduce => commands::reduce_cmd(cfg, &mut art),
        Subcommand::Escape => commands::escape_cmd(cfg, &mut art),
        Subcommand::IntegralDemo => commands::integral_demo_cmd(cfg, &mut art),
    }
    .with_context(|| format!("{} failed", cmd.name()))?;
    Ok(Outcome {
        lines,
        files: art.written().to_vec(),
    })
}

/// Sizes the global worker pool from `MANIFOLD_SDE_THREADS`; unset means
/// one worker per core. Returns the thread count in use.
pub fn configure_threads() -> Result<usize> {
    let requested = match std::env::var(THREADS_ENV) {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .ok()
                .filter(|&n| n >= 1)
                .with_context(|| format!("{THREADS_ENV} must be a positive integer, got {v:?}"))?,
        ),
        Err(_) => None,
    };
    if let Some(n) = requested {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    Ok(rayon::current_num_threads())
}

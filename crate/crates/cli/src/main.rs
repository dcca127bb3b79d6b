use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;

use manifold_sde_cli::{configure_threads, load_config, run, Subcommand};

/// Simulate Ito/Stratonovich SDEs, verify and construct invariant manifolds,
/// and reduce to the center manifold.
#[derive(Debug, Parser)]
#[command(name = "manifold-sde", version)]
struct Cli {
    #[command(subcommand)]
    command: Subcommand,
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Only errors on stderr, nothing on stdout.
    #[arg(long, global = true)]
    quiet: bool,
}

fn main_inner(cli: Cli) -> Result<()> {
    let threads = configure_threads()?;
    log::debug!("{threads} worker threads");
    let path = cli.config.context("missing --config <path>")?;
    let mut cfg = load_config(&path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let outcome = run(cli.command, &cfg, &cli.out)?;
    if !cli.quiet {
        let mut stdout = io::stdout().lock();
        for line in &outcome.lines {
            // a closed pipe (e.g. `| head`) is not an error
            if writeln!(stdout, "{line}").is_err() {
                break;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

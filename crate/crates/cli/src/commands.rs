//! Subcommand bodies, shared by the binary and the tests.

use std::path::{Path, PathBuf};

use log::info;
use schwarz_core::solvers::{Clock, NoClock};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::experiment::{prepare, run_prepared, Overrides, WallClock};
use crate::output::write_artifacts;
use crate::suite::{run_suite, Aggregate, Suite};

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_VAR: &str = "SCHWARZ_OUTPUT_ROOT";

fn default_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_VAR).map_or_else(|| PathBuf::from("runs"), PathBuf::from)
}

/// `--out`, then the document's `output_dir`, then `<root>/<name>`.
pub fn output_dir(cli_out: Option<&Path>, config: &ExperimentConfig) -> PathBuf {
    cli_out
        .map(Path::to_owned)
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| default_root().join(&config.name))
}

pub fn run(config_path: &Path, out: Option<&Path>, overrides: &Overrides, timings: bool) -> Result<PathBuf, CliError> {
    let mut cfg = ExperimentConfig::load(config_path)?;
    overrides.apply(&mut cfg);
    let prepared = prepare(&cfg)?;
    let mut wall;
    let clock: &mut dyn Clock = if timings {
        wall = WallClock::start();
        &mut wall
    } else {
        &mut NoClock
    };
    let outcome = run_prepared(prepared, clock)?;
    let dir = output_dir(out, &cfg);
    for path in write_artifacts(&dir, &outcome)? {
        info!("wrote {}", path.display());
    }
    Ok(dir)
}

pub fn suite(suite_path: &Path, out: Option<&Path>, overrides: &Overrides, timings: bool) -> Result<Aggregate, CliError> {
    let suite = Suite::load(suite_path)?;
    let root = out.map_or_else(default_root, Path::to_owned);
    run_suite(&suite, &root, overrides, timings)
}

/// Parses and builds everything a run needs, without solving.
pub fn validate(config_path: &Path) -> Result<String, CliError> {
    let cfg = ExperimentConfig::load(config_path)?;
    let p = prepare(&cfg)?;
    let colors = p.color_count().map_or_else(String::new, |c| format!(", {c} colors"));
    Ok(format!(
        "{}: {} dofs, {} subspaces{colors}, tau = {} (tau0 = {}), omega = {} (omega0 = {})",
        cfg.name,
        p.objective().dim(),
        p.subspace_count(),
        p.asm.tau,
        p.tau0,
        p.asm.omega,
        p.omega0
    ))
}

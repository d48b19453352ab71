//! Trace CSV, summary JSON and plot script.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use schwarz_core::analysis::FitMode;
use schwarz_core::solvers::IterationTrace;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::experiment::Outcome;

pub const TRACE_FILE: &str = "trace.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const PLOT_FILE: &str = "plot.gp";

/// Bumped on any change to the trace columns.
pub const CSV_SCHEMA_VERSION: u32 = 1;
pub const TRACE_HEADER: [&str; 5] = ["iter", "energy", "energy_error", "local_iters_max", "wall_ms"];

fn float(x: f64) -> String {
    format!("{x:.17e}")
}

fn out_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Output(format!("{}: {e}", path.display()))
}

pub fn trace_csv(trace: &IterationTrace) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::Output(e.to_string());
    w.write_record(TRACE_HEADER).map_err(fail)?;
    for r in &trace.records {
        w.write_record([
            r.iter.to_string(),
            float(r.energy),
            r.energy_error.map(float).unwrap_or_default(),
            r.local_iters_max.to_string(),
            float(r.wall_ms),
        ])
        .map_err(fail)?;
    }
    w.into_inner().map_err(|e| CliError::Output(e.to_string()))
}

#[derive(Debug, Serialize)]
pub struct RateSummary {
    pub mode: &'static str,
    pub value: f64,
    pub residual: f64,
    pub window: [usize; 2],
    pub floor_hit: bool,
    pub convergent: bool,
}

#[derive(Debug, Serialize)]
pub struct BoundSummary {
    pub threshold: f64,
    pub burn_in: Option<usize>,
    pub worst_ratio: f64,
    pub violations: Vec<usize>,
    pub slow_large_steps: usize,
    pub holds: bool,
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub version: &'static str,
    pub csv_schema: u32,
    pub name: String,
    pub sharpness: f64,
    pub smoothness: f64,
    pub tau: f64,
    pub omega: f64,
    pub tau0: f64,
    pub omega0: f64,
    pub subspaces: usize,
    pub colors: Option<usize>,
    pub iterations: usize,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub reference_energy: f64,
    pub reference_residual: f64,
    pub monotone: bool,
    pub max_local_iters: usize,
    pub rate: Option<RateSummary>,
    pub fit_error: Option<String>,
    pub predicted_slope: Option<f64>,
    pub predicted_rate: Option<f64>,
    pub kappa: Option<f64>,
    pub c0: Option<f64>,
    pub mu: Option<f64>,
    pub r0: Option<f64>,
    pub bound: Option<BoundSummary>,
    pub notes: Vec<String>,
    pub config: ExperimentConfig,
}

impl Summary {
    pub fn new(outcome: &Outcome) -> Self {
        let p = &outcome.prepared;
        let a = &outcome.analysis;
        let info = p.objective().info();
        let t = &outcome.trace;
        Summary {
            version: env!("CARGO_PKG_VERSION"),
            csv_schema: CSV_SCHEMA_VERSION,
            name: p.config.name.clone(),
            sharpness: info.sharpness,
            smoothness: info.smoothness,
            tau: p.asm.tau,
            omega: p.asm.omega,
            tau0: p.tau0,
            omega0: p.omega0,
            subspaces: p.subspace_count(),
            colors: p.color_count(),
            iterations: t.records.len() - 1,
            initial_energy: t.records[0].energy,
            final_energy: t.records.last().unwrap().energy,
            reference_energy: outcome.reference.energy,
            reference_residual: outcome.reference.residual,
            monotone: t.is_monotone(),
            max_local_iters: t.records.iter().map(|r| r.local_iters_max).max().unwrap_or(0),
            rate: a.fit.as_ref().map(|f| RateSummary {
                mode: match f.mode {
                    FitMode::Linear => "linear",
                    FitMode::Sublinear => "sublinear",
                },
                value: f.value,
                residual: f.residual,
                window: [f.window.0, f.window.1],
                floor_hit: f.floor_hit,
                convergent: f.convergent,
            }),
            fit_error: a.fit_error.clone(),
            predicted_slope: a.predicted_slope,
            predicted_rate: a.predicted_rate,
            kappa: a.kappa,
            c0: a.c0,
            mu: a.sublevel.map(|s| s.sharpness),
            r0: a.sublevel.map(|s| s.radius),
            bound: a.bound.as_ref().map(|b| BoundSummary {
                threshold: b.threshold,
                burn_in: b.burn_in,
                worst_ratio: b.worst_ratio,
                violations: b.violations.clone(),
                slow_large_steps: b.slow_large_steps.len(),
                holds: b.holds(),
            }),
            notes: a.notes.clone(),
            config: p.config.clone(),
        }
    }
}

pub fn plot_script(name: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set logscale y\n\
         set xlabel 'iteration'\n\
         set ylabel 'energy error'\n\
         set title '{name}'\n\
         set terminal pngcairo size 800,600\n\
         set output 'energy_error.png'\n\
         plot '{TRACE_FILE}' using 1:3 every ::1 with linespoints title 'E(u_n) - E(u*)'\n"
    )
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut f = fs::File::create(path).map_err(|e| out_err(path, e))?;
    f.write_all(bytes).map_err(|e| out_err(path, e))
}

/// Writes the three artifacts into `dir`, creating it if needed.
pub fn write_artifacts(dir: &Path, outcome: &Outcome) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(|e| out_err(dir, e))?;
    let trace = dir.join(TRACE_FILE);
    write_file(&trace, &trace_csv(&outcome.trace)?)?;
    let summary = dir.join(SUMMARY_FILE);
    let json = serde_json::to_vec_pretty(&Summary::new(outcome)).map_err(|e| out_err(&summary, e))?;
    write_file(&summary, &json)?;
    let plot = dir.join(PLOT_FILE);
    write_file(&plot, plot_script(&outcome.prepared.config.name).as_bytes())?;
    Ok(vec![trace, summary, plot])
}

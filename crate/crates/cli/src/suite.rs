//! Suites: lists of experiments plus parameter sweeps, with an aggregate report.

use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::experiment::{prepare, run_prepared, Overrides, WallClock};
use crate::output::{self, write_artifacts};
use schwarz_core::solvers::{Clock, NoClock};

pub const AGGREGATE_FILE: &str = "aggregate.json";

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub name: String,
    /// Dotted key into the base document, e.g. `decomposition.overlap`.
    pub axis: String,
    pub values: Vec<Value>,
    pub base: Table,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Suite {
    #[serde(default)]
    pub experiments: Vec<Table>,
    #[serde(default)]
    pub sweeps: Vec<Sweep>,
}

impl Suite {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_owned(),
            source: e,
        })?;
        Self::from_toml(&text)
    }
}

fn set_path(table: &mut Table, path: &str, value: Value) -> Result<(), CliError> {
    let mut keys = path.split('.').peekable();
    let mut cur = table;
    while let Some(k) = keys.next() {
        if keys.peek().is_none() {
            cur.insert(k.to_owned(), value);
            return Ok(());
        }
        cur = cur
            .entry(k.to_owned())
            .or_insert_with(|| Value::Table(Table::new()))
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("sweep axis {path}: {k} is not a table")))?;
    }
    Err(CliError::Config("empty sweep axis".into()))
}

fn label(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn dir_name(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || "-_.=".contains(c) { c } else { '_' })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct EntryReport {
    pub name: String,
    pub sweep: Option<String>,
    pub status: &'static str,
    pub exit_code: i32,
    pub error: Option<String>,
    pub rate: Option<f64>,
    pub rate_mode: Option<&'static str>,
    pub kappa: Option<f64>,
    pub c0: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub name: String,
    pub axis: String,
    pub values: Vec<Value>,
    pub rates: Vec<Option<f64>>,
    /// Rates never increase along the listed values.
    pub nonincreasing: Option<bool>,
    pub nondecreasing: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Aggregate {
    pub version: &'static str,
    pub entries: Vec<EntryReport>,
    pub failures: usize,
    pub sweeps: Vec<SweepReport>,
}

fn monotone(rates: &[Option<f64>], up: bool) -> Option<bool> {
    let r: Option<Vec<f64>> = rates.iter().copied().collect();
    let r = r?;
    Some(r.windows(2).all(|w| if up { w[1] >= w[0] - 1e-12 } else { w[1] <= w[0] + 1e-12 }))
}

fn run_entry(
    name: String,
    sweep: Option<String>,
    mut table: Table,
    root: &Path,
    overrides: &Overrides,
    timings: bool,
) -> EntryReport {
    let mut report = EntryReport {
        name: name.clone(),
        sweep,
        status: "ok",
        exit_code: 0,
        error: None,
        rate: None,
        rate_mode: None,
        kappa: None,
        c0: None,
    };
    table.insert("name".into(), Value::String(name.clone()));
    let result = (|| {
        let mut cfg: ExperimentConfig = Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
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
        write_artifacts(&root.join(dir_name(&name)), &outcome)?;
        Ok::<_, CliError>(outcome)
    })();
    match result {
        Ok(outcome) => {
            let s = output::Summary::new(&outcome);
            report.rate = s.rate.as_ref().map(|r| r.value);
            report.rate_mode = s.rate.as_ref().map(|r| r.mode);
            report.kappa = s.kappa;
            report.c0 = s.c0;
        }
        Err(e) => {
            warn!("{name}: {e}");
            report.status = "failed";
            report.exit_code = e.exit_code();
            report.error = Some(e.to_string());
        }
    }
    report
}

/// Runs every entry; individual failures are recorded, not propagated.
pub fn run_suite(suite: &Suite, root: &Path, overrides: &Overrides, timings: bool) -> Result<Aggregate, CliError> {
    let mut entries = Vec::new();
    for (i, table) in suite.experiments.iter().enumerate() {
        let name = table
            .get("name")
            .and_then(Value::as_str)
            .map_or_else(|| format!("experiment-{i}"), str::to_owned);
        entries.push(run_entry(name, None, table.clone(), root, overrides, timings));
    }
    let mut sweeps = Vec::new();
    for sw in &suite.sweeps {
        let mut rates = Vec::new();
        for v in &sw.values {
            let mut table = sw.base.clone();
            let name = format!("{}-{}={}", sw.name, sw.axis.rsplit('.').next().unwrap_or(""), label(v));
            let entry = match set_path(&mut table, &sw.axis, v.clone()) {
                Ok(()) => run_entry(name, Some(sw.name.clone()), table, root, overrides, timings),
                Err(e) => EntryReport {
                    name,
                    sweep: Some(sw.name.clone()),
                    status: "failed",
                    exit_code: e.exit_code(),
                    error: Some(e.to_string()),
                    rate: None,
                    rate_mode: None,
                    kappa: None,
                    c0: None,
                },
            };
            rates.push(entry.rate);
            entries.push(entry);
        }
        sweeps.push(SweepReport {
            name: sw.name.clone(),
            axis: sw.axis.clone(),
            values: sw.values.clone(),
            nonincreasing: monotone(&rates, false),
            nondecreasing: monotone(&rates, true),
            rates,
        });
    }
    let failures = entries.iter().filter(|e| e.status != "ok").count();
    if failures > 0 {
        warn!("{failures} suite entries failed");
    }
    let agg = Aggregate {
        version: env!("CARGO_PKG_VERSION"),
        entries,
        failures,
        sweeps,
    };
    std::fs::create_dir_all(root).map_err(|e| CliError::Output(format!("{}: {e}", root.display())))?;
    let path = root.join(AGGREGATE_FILE);
    let json = serde_json::to_vec_pretty(&agg).map_err(|e| CliError::Output(e.to_string()))?;
    std::fs::write(&path, json).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
    Ok(agg)
}

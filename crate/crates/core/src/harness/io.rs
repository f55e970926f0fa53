use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AggregateRow, ExperimentConfig, HarnessError, MetricSeries, RunResult};
use crate::learning::EvalRecord;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunCsvRow {
    pub seed: u64,
    pub step: usize,
    pub edr: f64,
    pub violation: bool,
    pub satisfied: bool,
    pub accept_visits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateCsvRow {
    pub step: usize,
    pub mean_edr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub method: String,
    pub task: String,
    pub difficulty: String,
}

impl AggregateCsvRow {
    pub fn new(row: &AggregateRow, cfg: &ExperimentConfig) -> Self {
        AggregateCsvRow {
            step: row.step,
            mean_edr: row.mean_edr,
            ci_low: row.ci_low,
            ci_high: row.ci_high,
            method: cfg.train.method.to_string(),
            task: cfg.task.clone(),
            difficulty: cfg.difficulty.to_string(),
        }
    }
}

/// Everything needed to rerun one seed exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub seed: u64,
    pub config: ExperimentConfig,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.display().to_string(), source }
}

fn ensure_parent(path: &Path) -> Result<(), HarnessError> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => fs::create_dir_all(dir).map_err(io_err(dir)),
        _ => Ok(()),
    }
}

pub fn write_run_csv(path: &Path, run: &RunResult) -> Result<(), HarnessError> {
    ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path)?;
    for r in run.metrics.records() {
        w.serialize(RunCsvRow {
            seed: run.seed,
            step: r.step,
            edr: r.edr,
            violation: r.violation,
            satisfied: r.satisfied,
            accept_visits: r.accept_visits,
        })?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

/// Read a per-seed CSV back into its seed and series.
pub fn read_run_csv(path: &Path) -> Result<(u64, MetricSeries), HarnessError> {
    let mut r = csv::Reader::from_path(path)?;
    let mut seed = None;
    let mut records = Vec::new();
    for row in r.deserialize() {
        let row: RunCsvRow = row?;
        if *seed.get_or_insert(row.seed) != row.seed {
            return Err(HarnessError::Config(format!("{} mixes several seeds", path.display())));
        }
        records.push(EvalRecord {
            step: row.step,
            edr: row.edr,
            violation: row.violation,
            satisfied: row.satisfied,
            accept_visits: row.accept_visits,
        });
    }
    let seed = seed.ok_or_else(|| HarnessError::Config(format!("{} has no rows", path.display())))?;
    Ok((seed, MetricSeries::new(records)?))
}

pub fn write_aggregate_csv(path: &Path, rows: &[AggregateCsvRow]) -> Result<(), HarnessError> {
    ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

pub fn write_manifest(path: &Path, cfg: &ExperimentConfig, seed: u64) -> Result<(), HarnessError> {
    ensure_parent(path)?;
    let m = Manifest { version: env!("CARGO_PKG_VERSION").to_string(), seed, config: cfg.clone() };
    fs::write(path, toml::to_string(&m)?).map_err(io_err(path))
}

//! Experiment orchestration: configuration, seeded runs in parallel,
//! metrics, aggregation and persistence.

pub mod checks;
mod io;
mod metrics;

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::environments::{make_task, Difficulty, EnvError, Rect, TaskBundle};
use crate::learning::{train_loop, EpisodeSummary, EvalRecord, TrainConfig, TrainError};
use crate::shaping::DirichletParams;

pub use io::{read_run_csv, write_aggregate_csv, write_manifest, write_run_csv, AggregateCsvRow, Manifest, RunCsvRow};
pub use metrics::{
    aggregate, bootstrap_ci, eventually_discounted_return, intervals_overlap, moving_average,
    satisfaction_within_episode, violation_rate, AggregateRow, BOOTSTRAP_RESAMPLES, SMOOTHING_WINDOW,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    TomlRead(#[from] toml::de::Error),
    #[error(transparent)]
    TomlWrite(#[from] toml::ser::Error),
}

/// One experiment: a task, a method with its hyperparameters, and the seeds
/// to run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: String,
    pub difficulty: Difficulty,
    pub seeds: Vec<u64>,
    /// Probability of repeating the previous action.
    pub sticky: f64,
    /// Draw start cells uniformly from this rectangle.
    pub random_start: Option<Rect>,
    pub train: TrainConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            task: "reach-avoid".into(),
            difficulty: Difficulty::Hard,
            seeds: (0..10).collect(),
            sticky: 0.0,
            random_start: None,
            train: TrainConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String, HarnessError> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.seeds.is_empty() {
            return Err(HarnessError::Config("at least one seed is required".into()));
        }
        let mut seen = self.seeds.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.seeds.len() {
            return Err(HarnessError::Config("seeds must be distinct".into()));
        }
        self.train.validate()?;
        self.build_task()?;
        Ok(())
    }

    /// The task with its wrappers applied.
    pub fn build_task(&self) -> Result<TaskBundle, HarnessError> {
        let mut task = make_task(&self.task, self.difficulty)?.sticky(self.sticky)?;
        if let Some(r) = self.random_start {
            task = task.random_start(r)?;
        }
        Ok(task)
    }

    /// Directory-friendly name that distinguishes sweep points.
    pub fn label(&self) -> String {
        format!(
            "{}-{}-{}-{}-alpha{}-scale{}",
            self.task,
            self.difficulty,
            self.train.method,
            self.train.learner.as_str(),
            self.train.alpha,
            self.train.intrinsic_scale
        )
    }
}

/// Evaluation records with strictly increasing steps.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricSeries {
    records: Vec<EvalRecord>,
}

impl MetricSeries {
    pub fn new(records: Vec<EvalRecord>) -> Result<Self, HarnessError> {
        if records.windows(2).any(|w| w[0].step >= w[1].step) {
            return Err(HarnessError::Config("evaluation steps must be strictly increasing".into()));
        }
        Ok(MetricSeries { records })
    }

    pub fn records(&self) -> &[EvalRecord] {
        &self.records
    }

    pub fn steps(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.step).collect()
    }

    pub fn edr(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.edr).collect()
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub metrics: MetricSeries,
    pub episodes: Vec<EpisodeSummary>,
    pub posterior: Option<DirichletParams>,
    pub duration: Duration,
}

impl RunResult {
    /// Fraction of training episodes that entered a sink, when the task has
    /// one.
    pub fn violation_rate(&self) -> Option<f64> {
        let has_sink = self.config.build_task().map(|t| t.has_avoid_region()).unwrap_or(false);
        if has_sink {
            violation_rate(&self.episodes)
        } else {
            None
        }
    }
}

pub fn run_seed(cfg: &ExperimentConfig, seed: u64) -> Result<RunResult, HarnessError> {
    let task = cfg.build_task()?;
    let start = Instant::now();
    let out = train_loop(&task, &cfg.train, seed)?;
    Ok(RunResult {
        config: cfg.clone(),
        seed,
        metrics: MetricSeries::new(out.evals)?,
        episodes: out.episodes,
        posterior: out.posterior,
        duration: start.elapsed(),
    })
}

/// Run every seed of `cfg`, in parallel, returning results in seed order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunResult>, HarnessError> {
    cfg.validate()?;
    cfg.seeds.par_iter().map(|&s| run_seed(cfg, s)).collect()
}

/// Command-line overrides applied on top of a configuration file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub task: Option<String>,
    pub difficulty: Option<Difficulty>,
    pub seeds: Option<Vec<u64>>,
    pub method: Option<crate::baselines::Method>,
    pub learner: Option<crate::learning::Learner>,
    pub steps: Option<usize>,
    pub alpha: Option<f64>,
    pub intrinsic_scale: Option<f64>,
    pub posterior_samples: Option<usize>,
    pub sticky: Option<f64>,
    pub random_start: Option<Rect>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(t) = &self.task {
            cfg.task = t.clone();
        }
        if let Some(d) = self.difficulty {
            cfg.difficulty = d;
        }
        if let Some(s) = &self.seeds {
            cfg.seeds = s.clone();
        }
        if let Some(m) = self.method {
            cfg.train.method = m;
        }
        if let Some(l) = self.learner {
            cfg.train.learner = l;
        }
        if let Some(n) = self.steps {
            cfg.train.total_steps = n;
        }
        if let Some(a) = self.alpha {
            cfg.train.alpha = a;
        }
        if let Some(c) = self.intrinsic_scale {
            cfg.train.intrinsic_scale = c;
        }
        if let Some(n) = self.posterior_samples {
            cfg.train.posterior_samples = n;
        }
        if let Some(p) = self.sticky {
            cfg.sticky = p;
        }
        if self.random_start.is_some() {
            cfg.random_start = self.random_start;
        }
    }
}

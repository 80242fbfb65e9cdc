use std::collections::BTreeSet;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::classifier::TrainConfig;
use crate::dataset::{SessionId, SynthConfig};
use crate::error::{Error, Result};
use crate::sampler::StrategyConfig;

/// Synthetic data description as stored in a `--synth-config` file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSource {
    #[serde(flatten)]
    pub config: SynthConfig,
    /// Seed for data generation, independent of the experiment seeds.
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataSource {
    Pack(PathBuf),
    Synth(SynthSource),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub source: DataSource,
    pub test_sessions: BTreeSet<SessionId>,
    /// Compared strategies; every one runs on every seed.
    pub strategies: Vec<StrategyConfig>,
    /// Agg-Var distance threshold D.
    pub distance_threshold: f64,
    /// Candidates per increment.
    pub batch_m: usize,
    /// Accuracy is evaluated and recorded for this many leading increments.
    pub increments_to_report: usize,
    /// Hard cap on increments; `None` runs until the schedule is exhausted or
    /// every class is learned past the reporting horizon.
    pub max_increments: Option<usize>,
    pub seeds: Vec<u64>,
    pub train: TrainConfig,
    /// Optional snapshot to start every run from instead of an empty store.
    #[serde(default)]
    pub initial_model: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Defaults mirroring the reference protocol on a given data source:
    /// D = 17.5, lambda = 0.7, m = 5, k = 1, 50 reported increments, 5 seeds.
    pub fn new(source: DataSource, test_sessions: BTreeSet<SessionId>) -> Self {
        ExperimentConfig {
            source,
            test_sessions,
            strategies: vec![StrategyConfig::new(crate::sampler::StrategyKind::Curiosity)],
            distance_threshold: 17.5,
            batch_m: 5,
            increments_to_report: 50,
            max_increments: None,
            seeds: vec![1, 2, 3, 4, 5],
            train: TrainConfig::default(),
            initial_model: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.distance_threshold.is_finite() && self.distance_threshold > 0.0) {
            return Err(Error::validation("distance threshold D must be > 0"));
        }
        if self.batch_m == 0 {
            return Err(Error::validation("batch size m must be >= 1"));
        }
        if self.seeds.is_empty() {
            return Err(Error::validation("at least one seed is required"));
        }
        if self.strategies.is_empty() {
            return Err(Error::validation("at least one strategy is required"));
        }
        for s in &self.strategies {
            s.validate()?;
            if s.k > self.batch_m {
                return Err(Error::validation(format!(
                    "label budget k = {} exceeds batch size m = {}",
                    s.k, self.batch_m
                )));
            }
        }
        if let DataSource::Synth(s) = &self.source {
            s.config.validate()?;
        }
        self.train.validate()
    }
}

//! Seeded experiment runner: increment loop, selection, labeling, model
//! update, rehearsal, retraining and evaluation.

mod config;
mod metrics;

use std::collections::HashMap;

use rand::RngCore;
use rayon::prelude::*;

use crate::aggvar::{load_model, ModelStore};
use crate::classifier::{LinearClassifier, TrainConfig};
use crate::dataset::{
    make_increments, read_feature_pack, split_by_session, synth_generate, Dataset, ObjectId,
    Oracle,
};
use crate::error::{Error, Result};
use crate::rehearsal::{build_rehearsal_set, LabeledExample};
use crate::rng::{derive, Stream};
use crate::sampler::{select_objects, StrategyConfig, StrategyKind};
use crate::scalar::Scalar;

pub use config::{DataSource, ExperimentConfig, SynthSource};
pub use metrics::{
    aggregate, write_aggregate, write_metrics, AggregateCurve, AggregatePoint, IncrementRecord,
    MetricsFormat, MetricsLog,
};

/// Loaded and split data shared by every run of a suite.
#[derive(Debug, Clone)]
pub struct Experiment<T> {
    pub config: ExperimentConfig,
    pub train: Dataset<T>,
    pub test: Dataset<T>,
    initial: Option<ModelStore<T>>,
}

impl<T: Scalar> Experiment<T> {
    pub fn prepare(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let full: Dataset<T> = match &config.source {
            DataSource::Pack(path) => read_feature_pack(path)?,
            DataSource::Synth(s) => synth_generate(&s.config, s.seed)?,
        };
        let (train, test) = split_by_session(&full, &config.test_sessions)?;
        let initial = match &config.initial_model {
            Some(path) => {
                let store = load_model(path, T::of(config.distance_threshold))?;
                if store.dimension() != train.dimension() {
                    return Err(Error::validation(format!(
                        "model snapshot has dimension {}, data has {}",
                        store.dimension(),
                        train.dimension()
                    )));
                }
                Some(store)
            }
            None => None,
        };
        Ok(Experiment {
            config: config.clone(),
            train,
            test,
            initial,
        })
    }

    /// One seeded run of one strategy. Returns the metrics and the final
    /// centroid store.
    pub fn run(&self, strategy: &StrategyConfig, seed: u64) -> Result<(MetricsLog, ModelStore<T>)> {
        let cfg = &self.config;
        let train = &self.train;
        let schedule = make_increments(train, cfg.batch_m, seed)?;
        let limit = cfg
            .max_increments
            .map_or(schedule.len(), |n| n.min(schedule.len()));
        let target_classes = train.objects_per_class().len();
        let by_id: HashMap<ObjectId, usize> = train
            .objects()
            .iter()
            .enumerate()
            .map(|(i, o)| (o.object_id, i))
            .collect();

        let mut store = match &self.initial {
            Some(s) => s.clone(),
            None => ModelStore::new(train.dimension(), T::of(cfg.distance_threshold))?,
        };
        let oracle = Oracle::new(train);
        let mut clf: Option<LinearClassifier<T>> = None;
        let mut records = Vec::new();
        let mut increments_to_all = None;
        let mut increments_run = 0;

        for batch in schedule.iter().take(limit) {
            let i = batch.increment_index;
            if i >= cfg.increments_to_report && increments_to_all.is_some() {
                break;
            }
            let selection = select_objects(
                batch,
                train,
                strategy,
                &store,
                clf.as_ref(),
                &mut derive(seed, Stream::Selection, i as u32),
            )?;

            // pseudo-exemplars cover everything learned before this increment
            let mut examples = build_rehearsal_set(&store, &mut derive(seed, Stream::Rehearsal, i as u32));
            let mut selected_classes = Vec::with_capacity(selection.selected.len());
            for id in &selection.selected {
                let obj = &train.objects()[by_id[id]];
                let label = oracle.label(obj)?;
                store.learn_object(label, &obj.views)?;
                examples.extend(obj.views.iter().map(|v| LabeledExample::real(v.clone(), label)));
                selected_classes.push(label);
            }
            increments_run += 1;
            if increments_to_all.is_none() && store.num_classes() >= target_classes {
                increments_to_all = Some(i + 1);
            }

            let reporting = i < cfg.increments_to_report;
            if reporting || strategy.kind == StrategyKind::Softmax {
                let train_cfg = TrainConfig {
                    seed: cfg.train.seed ^ derive(seed, Stream::Training, i as u32).next_u64(),
                    ..cfg.train
                };
                clf = Some(LinearClassifier::train(&examples, store.class_ids(), &train_cfg)?);
            }
            if reporting {
                let accuracy = clf.as_ref().expect("trained above").evaluate(&self.test)?;
                records.push(IncrementRecord {
                    increment: i,
                    test_accuracy: accuracy,
                    classes_learned: store.num_classes(),
                    labels_used: oracle.queries(),
                    selected_ids: selection.selected.clone(),
                    selected_classes,
                    cold_start: selection.cold_start,
                    candidates: selection.scores.iter().map(metrics::widen_score).collect(),
                });
            }
        }

        let log = MetricsLog::new(
            strategy,
            seed,
            cfg,
            records,
            increments_to_all,
            increments_run,
            oracle.queries(),
            store.class_statistics(),
        );
        Ok((log, store))
    }
}

/// One run of `strategy` under `seed`.
pub fn run_experiment<T: Scalar>(
    cfg: &ExperimentConfig,
    strategy: &StrategyConfig,
    seed: u64,
) -> Result<MetricsLog> {
    Experiment::<T>::prepare(cfg)?
        .run(strategy, seed)
        .map(|(log, _)| log)
}

/// Every strategy on every seed, strategy-major. Runs execute in parallel;
/// the output order and content do not depend on scheduling.
pub fn run_suite<T: Scalar>(cfg: &ExperimentConfig) -> Result<Vec<MetricsLog>> {
    let exp = Experiment::<T>::prepare(cfg)?;
    run_prepared(&exp)
}

pub fn run_prepared<T: Scalar>(exp: &Experiment<T>) -> Result<Vec<MetricsLog>> {
    Ok(run_prepared_with_models(exp)?
        .into_iter()
        .map(|(log, _)| log)
        .collect())
}

/// Like [`run_prepared`], also returning each run's final centroid store.
pub fn run_prepared_with_models<T: Scalar>(
    exp: &Experiment<T>,
) -> Result<Vec<(MetricsLog, ModelStore<T>)>> {
    let jobs: Vec<(&StrategyConfig, u64)> = exp
        .config
        .strategies
        .iter()
        .flat_map(|s| exp.config.seeds.iter().map(move |&seed| (s, seed)))
        .collect();
    jobs.into_par_iter()
        .map(|(s, seed)| {
            exp.run(s, seed).map_err(|e| {
                Error::validation(format!("run {} seed {seed} failed: {e}", s.label()))
            })
        })
        .collect()
}
